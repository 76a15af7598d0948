#include <string>
#include <vector>

#include "phn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return phn::cli::run(args);
}
