#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "config.hpp"

namespace storesched::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

struct CommonOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  // Convention of every energy written to output files.
  LossConvention convention = LossConvention::kSplitSqrt;
};

// Each command returns an exit code and reports problems on `err`. Files
// written are listed on `out`.
int cmd_simulate(const CommonOptions& options, std::ostream& out, std::ostream& err);
int cmd_size(const CommonOptions& options, std::optional<SizeMode> mode, bool no_optimize,
             std::ostream& out, std::ostream& err);
int cmd_min_store_curve(const CommonOptions& options, std::ostream& out, std::ostream& err);
int cmd_tune(const CommonOptions& options, std::ostream& out, std::ostream& err);
int cmd_synth(const CommonOptions& options, std::ostream& out, std::ostream& err);
int cmd_stats(const CommonOptions& options, std::ostream& out, std::ostream& err);

// Full command line, as main() sees it.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace storesched::cli
