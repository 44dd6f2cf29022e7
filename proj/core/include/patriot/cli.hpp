#ifndef PATRIOT_CLI_HPP
#define PATRIOT_CLI_HPP

namespace patriot {

/// Full command-line entry point. Returns the process exit code:
/// 0 passed (warnings included), 1 failed/divergent, 2 broken or
/// config/usage error.
int run_cli(int argc, char** argv);

} // namespace patriot

#endif
