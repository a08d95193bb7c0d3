#include "bridgesolve/commands.hpp"

int main(int argc, char** argv) { return bridgesolve::run_cli(argc, argv); }
