#include <string>

#include "cgn/cli.hpp"

// `gathermodel cost` and `gathermodel fit ...` are `cgn model <sub> ...`.
int main(int argc, char** argv) { return cgn::cli::main_entry(argc, argv, {"model"}); }
