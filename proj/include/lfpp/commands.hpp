#pragma once

#include <ostream>

#include "lfpp/config.hpp"

namespace lfpp {

// Subcommands behind the lfpp tool. Each returns the process exit status:
// 0 on success, 1 when jobs or checks failed. Usage errors are thrown as
// Error(ErrorKind::usage) and mapped to status 2 by the caller.

int cmd_estimate(const RunConfig& cfg, std::ostream& out);
int cmd_bounds(const RunConfig& cfg, std::ostream& out);
int cmd_dgamma(const RunConfig& cfg, std::ostream& out);
int cmd_sample(const RunConfig& cfg, std::ostream& out);
int cmd_verify(const RunConfig& cfg, std::ostream& out);

}  // namespace lfpp
