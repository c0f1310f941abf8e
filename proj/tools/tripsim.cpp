#include "tripsim/cli.hpp"

int main(int argc, char** argv) { return tripsim::cli::main(argc, argv); }
