#ifndef PATRIOT_REPORTER_HPP
#define PATRIOT_REPORTER_HPP

#include <string>
#include <vector>

#include "patriot/collector.hpp"
#include "patriot/runner.hpp"

namespace patriot {

struct ReportStep {
    std::string status;
    std::string detail;
    SimTime started_at = 0;
    SimTime ended_at = 0;
};

struct ReportCase {
    std::string name;
    std::string verdict;
    std::vector<ReportStep> steps;
    SimTime started_at = 0;
    SimTime ended_at = 0;
    std::vector<std::int64_t> context; // collector seqs within [started_at, ended_at]
};

struct ReportCounts {
    std::int64_t passed = 0;
    std::int64_t warnings = 0;
    std::int64_t failed = 0;
    std::int64_t broken = 0;
    std::int64_t skipped = 0;
};

struct ReportDocument {
    std::string suite;
    std::string verdict;
    ReportCounts counts;
    std::vector<ReportCase> cases;
    std::uint64_t seed = 0;
    std::string config_hash;
};

/// Join suite results with the finalized collector log: each case gets
/// the seqs of records whose sim time falls inside its span. Throws
/// ValidationError when the log does not belong to the same run.
ReportDocument build_report(const SuiteResult& result, const CollectorLog& log);

/// Canonical JSON: fixed key order, parse(emit(r)) == r.
std::string emit_json(const ReportDocument& report);
ReportDocument report_from_json(const std::string& bytes);

/// JUnit-compatible XML: Failed -> <failure>, Broken -> <error>,
/// Skipped -> <skipped/>, Warning -> passed testcase with a WARNING
/// system-out line. Durations are sim-time spans in seconds.
std::string emit_junit_xml(const ReportDocument& report);

} // namespace patriot

#endif
