#include "mxsr_cli/cli.hpp"

int main(int argc, char** argv) { return mxsr::cli::run(argc, argv); }
