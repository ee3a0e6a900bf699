#include "agl/cli/commands.hpp"

int main(int argc, char** argv) { return agl::cli::run_cli(argc, argv); }
