#include <iostream>

#include "spectube/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return spectube::run_cli(args, std::cout, std::cerr);
}
