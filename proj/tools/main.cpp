#include "edp/cli.hpp"

int main(int argc, char** argv) { return edp::cli_main(argc, argv); }
