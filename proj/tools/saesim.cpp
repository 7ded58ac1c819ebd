#include "saesim/cli.hpp"

int main(int argc, char** argv) { return saesim::cli::run(argc, argv); }
