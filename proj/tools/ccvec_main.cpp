#include "ccvec/cli.hpp"

int main(int argc, char** argv) { return ccvec::cli::dispatch(argc, argv); }
