#include "scalekit/cli.hpp"

int main(int argc, char** argv) { return scalekit::cli::run(argc, argv); }
