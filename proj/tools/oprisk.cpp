#include "oprisk/cli.hpp"

int main(int argc, char** argv) { return oprisk::cli::main(argc, argv); }
