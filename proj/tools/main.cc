#include <iostream>

#include "commands.h"

int main(int argc, char** argv) {
  return noisecal::cli::run_cli(argc, argv, std::cout, std::cerr);
}
