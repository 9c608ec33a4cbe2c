#include <iostream>

#include "lowrank_sdp/cli_io.hpp"

int main(int argc, char** argv) {
  return lowrank_sdp::run_cli(argc, argv, std::cout, std::cerr);
}
