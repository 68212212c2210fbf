#include "mapflow/cli.hpp"

int main(int argc, char** argv) { return mapflow::run_cli(argc, argv); }
