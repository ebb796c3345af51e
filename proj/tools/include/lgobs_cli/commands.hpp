#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lgobs_cli/config.hpp"

namespace lgobs::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

void cmd_generate(const RunConfig& cfg, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);
void cmd_evaluate(const RunConfig& cfg, std::ostream& out);
void cmd_sweep(const RunConfig& cfg, std::ostream& out);
/// Returns false when the tolerance is violated.
bool cmd_gradcheck(const RunConfig& cfg, std::ostream& out);

/// Full command line handling. `args` excludes the program name;
/// `env_config` is the value of LGOBS_CONFIG, if set. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::optional<std::string>& env_config);

}  // namespace lgobs::cli
