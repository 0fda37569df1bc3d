#include <iostream>

#include "vmicm/cli.hpp"

int main(int argc, char** argv) {
    return vmicm::run_cli(argc, argv, std::cout, std::cerr);
}
