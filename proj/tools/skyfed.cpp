#include "skyfed/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return skyfed::run_cli(argc, argv, std::cout, std::cerr);
}
