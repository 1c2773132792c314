#include "incomp/cli.hpp"

int main(int argc, char** argv) { return incomp::cli::run(argc, argv); }
