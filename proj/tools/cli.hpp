#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bbm::cli {

enum class ExitCode : int {
  kPass = 0,
  kFail = 1,
  kError = 2,
  kInconclusive = 3,
};

struct Invocation {
  std::string subcommand;  // simulate ensemble check fluctuations overlap limits-selftest
  std::filesystem::path config;
  std::filesystem::path output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<unsigned> workers;
  std::uint64_t replication = 0;  // simulate only
  int verbosity = 0;
};

/// Parses argv into an Invocation. Returns std::nullopt after printing help
/// (exit_code = 0) or a usage error (exit_code = 2).
std::optional<Invocation> parse_arguments(int argc, const char* const* argv,
                                          int& exit_code);

/// Runs one invocation. Errors are reported on standard error and mapped to
/// exit codes: 0 all checks pass, 1 any check fails, 2 configuration or
/// runtime error, 3 every check inconclusive.
int run(const Invocation& invocation);

}  // namespace bbm::cli
