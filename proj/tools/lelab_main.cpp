#include "lelab/cli.hpp"

int main(int argc, char** argv) { return lelab::run_cli(argc, argv); }
