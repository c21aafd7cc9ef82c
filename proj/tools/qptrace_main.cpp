#include <string>
#include <vector>

#include "qptrace/cli.hpp"

int main(int argc, char** argv) {
    return qptrace::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
