#include "dfscsn/cli.hpp"

int main(int argc, char** argv) { return dfscsn::cli_main(argc, argv); }
