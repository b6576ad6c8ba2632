// SPDX-License-Identifier: Apache-2.0
#include "crew/cli.hpp"

int main(int argc, char** argv) {
    return crew::cli::run_main({argv + 1, argv + argc});
}
