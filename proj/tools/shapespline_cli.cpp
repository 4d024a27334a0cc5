#include "shapespline/experiments.hpp"

int main(int argc, char** argv) { return shapespline::cli_run(argc, argv); }
