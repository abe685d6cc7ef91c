#include <iostream>
#include <string>
#include <vector>

#include "lgsim/cli.h"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lgsim::cli::run(args, std::cout, std::cerr);
}
