#include "hiertext/cli.hpp"

int main(int argc, char** argv) { return hiertext::cli::run(argc, argv); }
