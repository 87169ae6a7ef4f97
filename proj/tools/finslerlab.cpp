#include "finslerlab/cli.hpp"

int main(int argc, char** argv) {
  return finslerlab::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
