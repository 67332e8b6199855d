#include <iostream>

#include "cmabnas/cli.hpp"

int main(int argc, char** argv)
{
    return cmabnas::run_cli(argc, argv, std::cout, std::cerr);
}
