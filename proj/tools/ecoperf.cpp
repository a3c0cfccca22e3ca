#include "ecoperf/cli.hpp"

int main(int argc, char** argv) { return ecoperf::run_cli(argc, argv); }
