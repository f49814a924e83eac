#include "mecgame/cli.hpp"

int main(int argc, char** argv) { return mecgame::cli::run(argc, argv); }
