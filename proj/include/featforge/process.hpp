#pragma once

#include <string>
#include <vector>

namespace featforge {

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;

    bool ok() const { return exit_code == 0; }
};

// Runs a command with argv semantics (no shell), capturing stdout and stderr.
// stdin_data, when non-empty, is fed to the child's stdin.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::string& stdin_data = {});

// Replaces invalid UTF-8 sequences with U+FFFD so downstream JSON stays valid.
std::string utf8_lossy(const std::string& bytes);

} // namespace featforge
