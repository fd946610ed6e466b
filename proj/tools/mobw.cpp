#include <mobw/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return mobw::cli::run(argc, argv, std::cout, std::cerr); }
