#include <iostream>

#include "gbert/cli.hpp"

int main(int argc, char** argv) {
    return gbert::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
