#include "cli.hpp"

int main(int argc, char** argv) {
  return rrcal::cli::run(std::vector<std::string>(argv, argv + argc));
}
