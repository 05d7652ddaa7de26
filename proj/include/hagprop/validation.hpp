#pragma once

#include <string>
#include <vector>

namespace hagprop {

struct CheckResult {
  std::string name;
  double defect;     // measured
  double tolerance;  // allowed
  bool pass;
  std::string note;
};

struct ValidationOptions {
  bool inject_cond1_violation = false;  // targeted fixture for the report path
  bool quick = false;                   // trims the slowest checks
};

// Executes the per-module invariant suites and returns one row per check.
std::vector<CheckResult> run_property_suite(const ValidationOptions& opt = {});

}  // namespace hagprop
