#include <iostream>

#include "ecmsim/cli.hpp"

int main(int argc, char** argv) {
    return ecmsim::cli::dispatch(argc, argv, std::cout, std::cerr);
}
