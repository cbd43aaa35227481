#include "zeus/cli.hpp"

int main(int argc, char** argv) { return zeus::run_cli(argc, argv); }
