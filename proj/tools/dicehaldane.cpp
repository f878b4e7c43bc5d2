#include <iostream>

#include "dice/cli.hpp"

int main(int argc, char** argv)
{
    return dice::cli::main(argc, argv, std::cout, std::cerr);
}
