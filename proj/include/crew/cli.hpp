// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace crew::cli {

/// Full CLI entry point; returns the process exit code
/// (0 success, 1 config/usage error, 2 aborted run(s)).
int run_main(const std::vector<std::string>& args);

/// Top-level --help text (golden-file tested).
std::string help_text();

} // namespace crew::cli
