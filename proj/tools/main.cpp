#include "hierarg/cli.hpp"

int main(int argc, char** argv) { return hierarg::cli::run(argc, argv); }
