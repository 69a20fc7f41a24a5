#include "cli.hpp"

int main(int argc, char** argv) { return nlosc::cli::run(argc, argv); }
