#include "commands.hpp"

int main(int argc, char** argv) { return pyrofocus::cli::run_cli(argc, argv); }
