#include "scorefusion/cli.hpp"

int main(int argc, char** argv) { return scorefusion::cli_main(argc, argv); }
