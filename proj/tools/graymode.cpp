#include <string>
#include <vector>

#include "graymode/cli.hpp"

int main(int argc, char** argv) {
  return graymode::cli::run(std::vector<std::string>(argv, argv + argc));
}
