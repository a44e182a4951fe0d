#include "cofd/cli.hpp"

int main(int argc, char** argv) { return cofd::cli::run(argc, argv); }
