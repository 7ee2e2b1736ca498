#include "splitsde/cli.hpp"

int main(int argc, char** argv) { return splitsde::cli::main(argc, argv); }
