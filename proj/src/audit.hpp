#pragma once

#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace lapseg {

// One named finite-difference audit with its acceptance tolerance.
struct AuditCase {
  std::string name;
  GradCheckReport report;
  double tol = 1e-4;

  bool pass() const { return report.pass(tol); }
};

// Elementary operations and losses, each checked at every coordinate.
std::vector<AuditCase> audit_ops();

// The full network, eval and train mode, on seeded coordinate samples.
std::vector<AuditCase> audit_model();

}  // namespace lapseg
