#include <iostream>

#include "barcoder/cli.hpp"

int main(int argc, char** argv) {
  return barcoder::cli_dispatch(argc, argv, std::cout, std::cerr);
}
