#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ctxcite/service/config.hpp"

namespace ctxcite::service {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitProviderFailure = 2;
inline constexpr int kExitBadInput = 3;

// Entry point for `ctxcite <verb> ...`; args excludes the program name.
// Results go to `out` as JSON (JSONL for eval); tables, summaries and
// diagnostics go to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
           const EnvLookup& env = ProcessEnvironment());

}  // namespace ctxcite::service
