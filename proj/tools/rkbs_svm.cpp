#include "rkbs/cli.hpp"

int main(int argc, char** argv) { return rkbs::cli::run(argc, argv); }
