#include "cpm/cli.hpp"

int main(int argc, char** argv) { return cpm::cli_main(argc, argv); }
