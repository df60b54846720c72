#include "hfpath/cli.hpp"

int main(int argc, char** argv) { return hfpath::parse_and_dispatch(argc, argv); }
