#include "autoeval/cli.hpp"

int main(int argc, char** argv) { return autoeval::run_cli(argc, argv); }
