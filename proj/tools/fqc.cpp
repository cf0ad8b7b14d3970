#include "cli.hpp"

int main(int argc, char** argv) { return fqc::cli::run(argc, argv); }
