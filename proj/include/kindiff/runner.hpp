#pragma once

#include <string>

#include "kindiff/config.hpp"

namespace kindiff {

inline constexpr const char* kToolVersion = "kindiff 0.1.0";

// Executes one subcommand (check | diffmat | kinetic | diffusion | converge),
// writing all artifacts under cfg.output. Returns the process exit status:
// zero iff every invariant check of the run passed.
int run_subcommand(const RunConfig& cfg, const std::string& mode);

}  // namespace kindiff
