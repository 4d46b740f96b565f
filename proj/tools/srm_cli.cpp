#include "srm/cli.hpp"

int main(int argc, char** argv) { return srm::cli::run(argc, argv); }
