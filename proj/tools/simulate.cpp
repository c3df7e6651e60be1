#include <iostream>

#include "sllg/study.hpp"

int main(int argc, char** argv) { return sllg::run_cli(argc, argv, std::cout, std::cerr); }
