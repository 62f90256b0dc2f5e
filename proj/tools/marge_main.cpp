#include "marge/cli.h"

int main(int argc, char** argv) { return marge::cli::run(argc, argv); }
