#include "uq/cli.hpp"

int main(int argc, char** argv) { return uq::cli::run_main(argc, argv); }
