#include "fedprov/cli.hpp"

int main(int argc, char** argv) { return fedprov::run_cli(argc, argv); }
