#include "cli_app.hpp"

int main(int argc, char** argv) { return cldiv::cli::run(argc, argv, std::cout, std::cerr); }
