#include "lsn/cli.hpp"

#include <iostream>

int main(int argc, char **argv)
{
    return lsn::cli::main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
