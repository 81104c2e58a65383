#ifndef SUBREGWEIGH_CLI_H_
#define SUBREGWEIGH_CLI_H_

#include <ostream>

namespace subregweigh {
namespace cli {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Entry point behind the subregweigh binary. Subcommands: weigh, inject,
// export-candidates, report, tokenize. Reports go to out, diagnostics to
// err. Returns the process exit code.
int Run(int argc, const char *const *argv, std::ostream &out,
        std::ostream &err);

}  // namespace cli
}  // namespace subregweigh

#endif  // SUBREGWEIGH_CLI_H_
