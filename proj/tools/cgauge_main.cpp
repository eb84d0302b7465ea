#include "cgauge/cli.hpp"

int main(int argc, char** argv) { return cgauge::cli_main(argc, argv); }
