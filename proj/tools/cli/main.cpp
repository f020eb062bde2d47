#include "cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return riskdisc::cli::dispatch(argc, argv, std::cout, std::cerr); }
