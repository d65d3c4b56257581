#include <string>
#include <vector>

#include "dolly/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dolly::cli::run(args);
}
