#include <vector>

#include "vitstr/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vitstr::cli::dispatch(args);
}
