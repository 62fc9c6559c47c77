#include <cortexforge/cli.hpp>

int main(int argc, char** argv) { return cortexforge::cli::run(argc, argv); }
