#include <string>
#include <vector>

#include "gtrack/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gtrack::run_cli(args);
}
