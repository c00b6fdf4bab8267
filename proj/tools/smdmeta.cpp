#include <iostream>

#include "smdmeta/cli.hpp"

int main(int argc, char** argv) {
    return smdmeta::cli::run(argc, argv, std::cout, std::cerr);
}
