#include <iostream>

#include <hsps/commands.hpp>

int main(int argc, char** argv)
{
    return hsps::cli::run(argc, argv, std::cout, std::cerr);
}
