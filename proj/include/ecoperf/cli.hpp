#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ecoperf {

/// Defaults shared by every command, read from `--config` or `$ECOPERF_CONFIG`.
/// Relative paths resolve against the config file's directory.
struct GlobalConfig {
  std::optional<std::filesystem::path> store;
  std::optional<std::filesystem::path> registry;
  std::optional<std::filesystem::path> weights;
  std::optional<std::uint64_t> seed;
  std::string verbosity = "quiet";  // quiet, info or debug

  /// Throws InvalidArgument on unknown keys, bad types or a weight file that does not load.
  static GlobalConfig load(const std::filesystem::path& path);
};

/// Exit codes: 0 success, 1 domain error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace ecoperf
