#include "goalcomp/cli.hpp"

int main(int argc, char** argv) { return goalcomp::run_cli(argc, argv); }
