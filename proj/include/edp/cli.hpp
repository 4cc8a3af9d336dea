#pragma once

#include <optional>
#include <string>

#include "edp/config.hpp"

namespace edp {

// Subcommand bodies, exposed so tests can drive them in-process. Each
// returns a process exit status and writes its metrics under out_dir.
int cmd_gen_data(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg, const std::string& out_dir);
int cmd_eval(const RunConfig& cfg, const std::string& out_dir,
             const std::string& checkpoint_path);
int cmd_bench(const RunConfig& cfg, const std::string& out_dir,
              const std::string& checkpoint_path);
int cmd_gradcheck(const std::string& out_dir);

// argv-level entry point: gen-data | train | eval | bench | gradcheck.
int cli_main(int argc, const char* const* argv);

}  // namespace edp
