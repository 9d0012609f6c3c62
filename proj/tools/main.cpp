#include <string>
#include <vector>

#include "shrinkers/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return shrinkers::cli::main(args);
}
