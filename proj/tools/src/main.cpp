#include "sasfm_cli/commands.hpp"

int main(int argc, char** argv) { return sasfm::cli::run_cli(argc, argv); }
