#include "foilflow/cli.hpp"

int main(int argc, char** argv) { return foilflow::cli::run(argc, argv); }
