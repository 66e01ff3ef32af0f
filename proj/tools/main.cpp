#include <iostream>

#include "dbobs_cli.hpp"

int main(int argc, char** argv) { return dbobs::cli::run_cli(argc, argv, std::cout, std::cerr); }
