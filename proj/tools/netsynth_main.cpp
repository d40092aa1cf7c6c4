#include <iostream>
#include <string>
#include <vector>

#include "netsynth/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return netsynth::run_cli(args, std::cout, std::cerr);
}
