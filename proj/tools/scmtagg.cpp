#include "scmtagg/cli.hpp"

int main(int argc, char** argv) { return scmtagg::cli::run(argc, argv); }
