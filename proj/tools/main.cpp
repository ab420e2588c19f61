#include "hiertau/cli.hpp"

int main(int argc, char** argv) { return hiertau::cli_main(argc, argv); }
