#pragma once

#include <functional>
#include <string>
#include <vector>

namespace rhfpt {

/// One verifiable property with its measured value and pinned tolerance.
struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // measured quantity (defect, slope error, ...)
  double tolerance = 0.0;  // the bound it is held to
  std::string detail;
};

using CheckSink = std::function<void(const CheckResult&)>;

/// Runs the full validation suite on the bundled desk-scale systems,
/// reporting each check through the sink; returns true iff every check
/// passed. Independent reference solves may use up to `workers` threads.
bool run_validation(const CheckSink& sink, int workers = 1);

/// Formats one status line: "CHECK <name> PASS|FAIL <value> <tolerance>".
std::string format_check_line(const CheckResult& r);

}  // namespace rhfpt
