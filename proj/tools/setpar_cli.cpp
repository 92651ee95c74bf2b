#include <iostream>
#include <string>
#include <vector>

#include "setpar/app/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return setpar::app::run_cli(args, std::cout, std::cerr);
}
