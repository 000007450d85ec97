#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace upsr::verify {

struct Options {
    uint64_t seed = 0xC0FFEE;
    /// Diagnostic mutation: scales the sampled/expected noise std inside the
    /// statistical checks; anything != 1 must make them fail.
    double variance_bug_scale = 1.0;
    bool include_training = true;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    bool skipped = false;
    double seconds = 0.0;
    nlohmann::json detail;
};

struct Check {
    std::string name;
    CheckResult (*fn)(const Options&);
};

/// The oracle/invariant suite. Check names are hierarchical
/// ("marginal.moments", "schedule.telescoping", ...) for substring filtering.
const std::vector<Check>& all_checks();

/// Run checks whose names contain `filter` (all when empty).
std::vector<CheckResult> run_checks(const Options& opt, const std::string& filter = "");

nlohmann::json report_json(const std::vector<CheckResult>& results);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace upsr::verify
