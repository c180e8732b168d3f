#include "trigan/harness/cli.hpp"

int main(int argc, char** argv) { return trigan::run_cli(argc, argv); }
