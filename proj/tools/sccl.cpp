#include "sccl/cli.hpp"

int main(int argc, char** argv) { return sccl::cli::run_cli(argc, argv); }
