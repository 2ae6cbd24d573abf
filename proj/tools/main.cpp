#include <iostream>
#include <string>
#include <vector>

#include "gigfrail/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gigfrail::run_cli(args, std::cout, std::cerr);
}
