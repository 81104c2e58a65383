#include <iostream>

#include "subregweigh/cli.h"

int main(int argc, char **argv) {
  return subregweigh::cli::Run(argc, argv, std::cout, std::cerr);
}
