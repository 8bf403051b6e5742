#include "app/commands.hpp"

int main(int argc, char** argv) { return xirl::app::run_cli(argc, argv); }
