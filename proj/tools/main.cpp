#include "primvote/cli.hpp"

int main(int argc, char** argv) { return primvote::cli_main(argc, argv); }
