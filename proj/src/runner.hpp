#pragma once

#include "runconfig.hpp"

namespace lapseg {

// Executes one run end to end: applies task defaults, validates, then
// dispatches on cfg.task. Throws Error subclasses; the CLI and the C API
// translate those into exit and status codes.
void run(const RunConfig& cfg);

}  // namespace lapseg
