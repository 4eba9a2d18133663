#pragma once

// The seventeen end-to-end acceptance checks. Each returns measured values,
// the requirement, the runtime against its budget and a verdict.

#include <string>
#include <vector>

namespace arrival::acceptance {

struct Options {
  // Relative error injected into hbar for the crossing amplitude of check 1.
  // Zero for real runs; nonzero is a sabotage switch that must make check 1 fail.
  double hbar_perturbation = 0.0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string measured;
  std::string required;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<std::string> notes;  // informational, never affect the verdict
};

std::vector<int> criterion_ids();
CriterionResult run_criterion(int id, const Options& o = {});

// "[PASS] #id name | measured ... | required ... | 1.2 s / 60 s"
std::string report_line(const CriterionResult& r);
std::string report_json(const std::vector<CriterionResult>& rs);

}  // namespace arrival::acceptance
