#include "cli.hpp"

int main(int argc, char** argv) { return vflow::cli::main(argc, argv); }
