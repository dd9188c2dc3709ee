#include <iostream>

#include "margsim/cli/commands.hpp"

int main(int argc, char** argv) { return margsim::cli::main_entry(argc, argv, std::cout, std::cerr); }
