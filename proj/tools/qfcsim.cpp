#include "qfcsim/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return qfcsim::cli::run(argc, argv, std::cout, std::cerr); }
