#include "dlr/cli.hpp"

int main(int argc, char** argv) { return dlr::cli::run(argc, argv); }
