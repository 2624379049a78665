#include "ttvr/session/cli.hpp"

int main(int argc, char** argv) { return ttvr::session::run_cli(argc, argv); }
