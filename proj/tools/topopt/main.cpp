#include "ntopo/cli.hpp"

int main(int argc, char** argv) { return ntopo::run_cli(argc, argv); }
