#include <iostream>
#include <string>
#include <vector>

#include "obstakit/cli.hpp"

int main(int argc, char** argv) {
    return obstakit::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
