#include "tamed/cli.hpp"

int main(int argc, char** argv) { return tamed::cli::main(argc, argv); }
