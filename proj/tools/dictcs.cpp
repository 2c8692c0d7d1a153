#include "dictcs/cli.hpp"

int main(int argc, char** argv) { return dictcs::cli::dispatch(argc, argv); }
