#include "fedfence/harness.hpp"

int main(int argc, char** argv) { return fedfence::run_cli(argc, argv); }
