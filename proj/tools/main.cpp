#include "gamehedge/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return gamehedge::cli::run(argc, argv, std::cout, std::cerr);
}
