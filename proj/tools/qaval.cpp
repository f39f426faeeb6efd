#include <iostream>
#include <string>
#include <vector>

#include "qaval/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return qaval::cli::run(args, std::cout, std::cerr);
}
