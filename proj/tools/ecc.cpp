#include "ecc/cli/commands.hpp"

int main(int argc, char** argv) { return ecc::cli::run_command(argc, argv); }
