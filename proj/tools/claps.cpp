#include "claps/cli.hpp"

int main(int argc, char** argv) { return claps::cli::main(argc, argv); }
