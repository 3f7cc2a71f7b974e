#include "routegame/cli.hpp"

int main(int argc, char** argv) { return routegame::cli_main(argc, argv); }
