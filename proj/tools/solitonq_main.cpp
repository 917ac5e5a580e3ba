#include "solitonq/cli.hpp"

int main(int argc, char** argv) { return solitonq::run_cli(argc, argv); }
