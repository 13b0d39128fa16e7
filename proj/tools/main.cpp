#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  talp::cli::Context ctx{std::cout, std::cerr, talp::cli::process_environment(), nullptr, {}};
  return talp::cli::run({argv + 1, argv + argc}, ctx);
}
