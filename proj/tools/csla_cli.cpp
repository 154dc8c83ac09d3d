#include "csla/cli.hpp"

int main(int argc, char** argv) { return csla::cli_dispatch(argc, argv); }
