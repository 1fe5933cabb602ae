#include "cstar/report.hpp"

#include <cstdio>

namespace cstar {

void Report::add(const std::string& name, const std::string& law,
                 double residual, double tolerance) {
  checks.push_back({name, law, residual, tolerance, residual <= tolerance});
}

bool Report::all_pass() const {
  for (const Check& c : checks)
    if (!c.pass) return false;
  return true;
}

Index Report::failures() const {
  Index n = 0;
  for (const Check& c : checks)
    if (!c.pass) ++n;
  return n;
}

std::string Report::text() const {
  std::string out;
  char line[512];
  for (const Check& c : checks) {
    std::snprintf(line, sizeof(line), "[%s] %-42s residual=%.3e tol=%.3e  %s\n",
                  c.pass ? "PASS" : "FAIL", c.name.c_str(), c.residual,
                  c.tolerance, c.law.c_str());
    out += line;
  }
  std::snprintf(line, sizeof(line), "%zu checks, %lld failed\n", checks.size(),
                static_cast<long long>(failures()));
  out += line;
  return out;
}

void Report::merge(const Report& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

void require(Report* report, const std::string& name, const std::string& law,
             double residual, double tolerance, const std::string& error_code) {
  if (report) report->add(name, law, residual, tolerance);
  if (!(residual <= tolerance))
    throw ValidationError(error_code, name + " residual " +
                                          std::to_string(residual) +
                                          " exceeds " + std::to_string(tolerance));
}

}  // namespace cstar
