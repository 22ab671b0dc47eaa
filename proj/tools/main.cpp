#include "otadapt/cli.hpp"

int main(int argc, char** argv) { return otadapt::run_cli(argc, argv); }
