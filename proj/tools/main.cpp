#include "psdsense/harness.hpp"

int main(int argc, char** argv) { return psdsense::cli_main(argc, argv); }
