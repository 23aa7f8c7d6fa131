#include "wgqed/cli.hpp"

int main(int argc, char** argv) { return wgqed::run_cli(argc, argv); }
