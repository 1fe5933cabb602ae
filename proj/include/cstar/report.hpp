// Structured verification records: one entry per checked identity, with the
// residual, the tolerance it was held to, and the outcome.

#pragma once

#include "cstar/linalg.hpp"

#include <string>
#include <vector>

namespace cstar {

struct Check {
  std::string name;
  std::string law;  // the identity being verified, in plain notation
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Report {
  std::string instance;
  std::vector<Check> checks;
  double wall_seconds = 0.0;

  void add(const std::string& name, const std::string& law, double residual,
           double tolerance);
  bool all_pass() const;
  Index failures() const;
  std::string text() const;
  void merge(const Report& other);
};

/// Records the check (when report is non-null) and throws ValidationError
/// with the given code if the residual exceeds the tolerance.
void require(Report* report, const std::string& name, const std::string& law,
             double residual, double tolerance, const std::string& error_code);

}  // namespace cstar
