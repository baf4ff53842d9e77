#pragma once

// Quick in-process invariant suites behind the CLI `selftest` subcommand.
// The full test coverage lives in the test binaries; these are the cheap
// smoke checks a deployed binary can run anywhere.

#include <string>
#include <vector>

namespace vitmm {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

std::vector<SuiteResult> run_selftest_suites();

} // namespace vitmm
