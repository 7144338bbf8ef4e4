#include "cgn/cli.hpp"

int main(int argc, char** argv) { return cgn::cli::main_entry(argc, argv, {"gatherd"}); }
