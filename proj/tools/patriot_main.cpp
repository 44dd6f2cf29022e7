#include "patriot/cli.hpp"

int main(int argc, char** argv) { return patriot::run_cli(argc, argv); }
