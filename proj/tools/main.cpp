#include <cstdlib>
#include <iostream>

#include "lgobs_cli/commands.hpp"

int main(int argc, char** argv) {
  std::optional<std::string> env;
  if (const char* v = std::getenv(lgobs::cli::kConfigEnv)) env = v;
  return lgobs::cli::run({argv + 1, argv + argc}, std::cout, std::cerr, env);
}
