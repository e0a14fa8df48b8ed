#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kwforge/attack.hpp"
#include "kwforge/errors.hpp"

namespace kwforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

/// Bad flags, a bad config file or an unusable target.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Settings shared by `attack` and `benchmark`.
struct RunConfig {
  std::string model = "toy";
  std::string map_path;       // empty: cached map or identity-padded
  std::string dataset_path;   // TSV of source<TAB>reference
  std::vector<std::string> sentences;
  std::size_t sample_size = 0;  // 0: whole dataset
  std::uint64_t seed = 0;
  std::optional<std::string> keyword;
  std::optional<std::size_t> nth;
  AttackConfig attack;  // attack.seed mirrors seed
  std::size_t workers = 1;
  std::string out_dir = "kwforge-out";
};

/// Parses run flags (no subcommand name). Values come from, in increasing
/// priority: built-in defaults, the JSON file named by --config, flags.
/// Throws UsageError for unknown flags, a bad config file or an invalid
/// combination.
RunConfig parse_run_config(const std::vector<std::string>& args);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns one of the exit codes above.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kwforge::cli
