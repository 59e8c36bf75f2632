// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "hamdrift/cli.hpp"

int main(int argc, char** argv) { return hamdrift::run_cli(argc, argv, std::cout, std::cerr); }
