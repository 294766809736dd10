#include "lanlab/cli.hpp"

int main(int argc, char** argv) { return lanlab::cli_main(argc, argv); }
