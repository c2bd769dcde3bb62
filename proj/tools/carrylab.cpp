#include "commands.hpp"

int main(int argc, char** argv) { return carrylab::cli::run(argc, argv); }
