#include "cli.hpp"

int main(int argc, char** argv) { return eod::cli::run(argc, argv); }
