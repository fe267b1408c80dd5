#include <iostream>

#include "wdc/cli.hpp"

int main(int argc, char** argv)
{
    return wdc::run_cli(argc, argv, std::cout, std::cerr);
}
