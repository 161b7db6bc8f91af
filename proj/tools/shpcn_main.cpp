#include "shpcn/cli.hpp"

int main(int argc, char** argv) { return shpcn::run_cli(argc, argv); }
