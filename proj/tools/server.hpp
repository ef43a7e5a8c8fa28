#pragma once

#include <string>

#include "qsim/env.hpp"

namespace qsim::cli {

/// Accepts TCP connections forever; each connection gets its own copy of
/// `prototype` and is served on its own thread.
void serve_tcp(const std::string& host, int port, const Env& prototype);

}  // namespace qsim::cli
