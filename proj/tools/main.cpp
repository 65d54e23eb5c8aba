#include "cli_commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    return s3t::cli::run_cli({argv, argv + argc}, std::cin, std::cout, std::cerr);
}
