#include "kg/cli.hpp"

int main(int argc, char** argv) { return kg::run_cli(argc, argv); }
