#include "cli.hpp"

int main(int argc, char** argv) {
  int exit_code = 0;
  const auto invocation = bbm::cli::parse_arguments(argc, argv, exit_code);
  if (!invocation) return exit_code;
  return bbm::cli::run(*invocation);
}
