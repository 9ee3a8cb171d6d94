#include "carnot/cli/commands.hpp"

int main(int argc, char** argv) { return carnot::cli::run_cli(argc, argv); }
