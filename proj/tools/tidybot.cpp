#include <iostream>
#include <string>
#include <vector>

#include "tidybot/cli/cli.hpp"

int main(int argc, char** argv) {
    return tidybot::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
