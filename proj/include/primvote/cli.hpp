#pragma once

namespace primvote {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitIo = 2, kExitInvalid = 3 };

/// Entry point of the `primvote` tool: generate, detect, evaluate, bench.
int cli_main(int argc, char** argv);

}  // namespace primvote
