#ifndef PATRIOT_RUNNER_HPP
#define PATRIOT_RUNNER_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "patriot/testbed.hpp"

namespace patriot {

enum class StepStatus { Passed, Warning, Failed, Broken, Skipped };
enum class Verdict { Passed, PassedWithWarnings, Failed, Broken };

std::string to_string(StepStatus s);
std::string to_string(Verdict v);
StepStatus step_status_from_string(const std::string& s);

/// Verdict precedence: Broken > Failed > PassedWithWarnings > Passed.
/// Skipped steps never influence the verdict.
Verdict aggregate_verdict(const std::vector<StepStatus>& statuses);

struct Comparator {
    std::string op; // = != < >
    Json literal;

    bool matches(const Json& value) const;
};

/// Hard response timeout for actuator invocations, in sim-ms.
inline constexpr SimTime kResponseTimeoutMs = 30000;

struct TestStep {
    std::string kind; // invoke-actuator|await-datapoint|inject|assert-state|warn-if|sleep|parallel|sync-point
    bool critical = true;

    std::string device;                       // invoke-actuator, await-datapoint, assert-state
    std::string endpoint;                     // invoke-actuator
    std::map<std::string, Json> fields;       // invoke-actuator
    std::string label;                        // await-datapoint
    std::optional<Comparator> comparator;     // await-datapoint
    SimTime timeout_ms = 0;                   // await-datapoint
    std::optional<SimTime> warn_after_ms;     // await-datapoint soft threshold
    std::optional<HubAction> action;          // inject
    std::string expected;                     // assert-state
    std::string cond_field;                   // warn-if: value|status|state|data.<key>
    std::optional<Comparator> condition;      // warn-if
    std::string detail;                       // warn-if message
    SimTime ms = 0;                           // sleep
    std::vector<std::vector<TestStep>> branches; // parallel

    static TestStep from_json(const Json& j);
    Json to_json() const;
};

struct TestCase {
    std::string name;
    std::string params_from; // datatable reference; empty = unparameterized
    std::vector<TestStep> steps;
};

struct TestSuite {
    std::string name;
    std::vector<TestCase> cases;

    static TestSuite from_json(const Json& j);
    Json to_json() const;
};

struct StepOutcome {
    StepStatus status = StepStatus::Passed;
    std::string detail;
    SimTime started_at = 0;
    SimTime ended_at = 0;
};

struct CaseResult {
    std::string name;
    std::vector<StepOutcome> outcomes;
    SimTime started_at = 0;
    SimTime ended_at = 0;
};

struct SuiteResult {
    std::string suite_name;
    Verdict verdict = Verdict::Passed;
    std::vector<CaseResult> cases;
    std::uint64_t seed = 0;
    std::string config_hash;
};

/// CSV with a header row; cells typed by lexical form (number/bool/string).
/// One JSON object per row. Ragged rows raise ValidationError naming the row.
std::vector<Json> load_datatable(const std::string& document);

using DatatableLoader = std::function<std::vector<Json>(const std::string& ref)>;

/// Expand parameterized cases into one instance per datatable row, with
/// ${name} placeholders substituted into step fields.
TestSuite expand_suite(const TestSuite& suite, const DatatableLoader& loader);

/// Run all cases sequentially on a provisioned, idle testbed. Every step
/// outcome lands in the collector as a test-event.
SuiteResult run_suite(Testbed& testbed, const TestSuite& suite,
                      const DatatableLoader& loader = nullptr);

struct PerfSpec {
    std::string device;
    std::string endpoint;
    double rate_per_s = 0.0;
    SimTime duration_ms = 0;
    std::map<std::string, Json> fields;

    static PerfSpec from_json(const Json& j);
    Json to_json() const;
};

struct PerfMetrics {
    std::int64_t sent = 0;
    std::int64_t ok = 0;
    std::int64_t error = 0;
    std::int64_t timeout = 0;
    double throughput_ok_per_s = 0.0;
    double latency_p50 = 0.0;
    double latency_p95 = 0.0;
    double latency_p99 = 0.0;
    double latency_max = 0.0;

    Json to_json() const;
};

/// Nearest-rank percentile: ascending sort, value at index ceil(p/100*N),
/// 1-indexed. p in 1..100; samples must be non-empty.
double percentile(std::vector<double> samples, int p);

/// Open-loop load: requests at nearest-ms multiples of 1000/rate, latency
/// measured in sim-ms; requests unanswered by duration + 30000 ms count
/// as timeouts.
PerfMetrics run_perf(Testbed& testbed, const PerfSpec& spec);

struct ReplayReport {
    bool identical = false;
    std::optional<std::int64_t> first_divergence;
};

/// Re-execute a recorded run (suite or perf, reconstructed from the log)
/// against the same config with the header seed and compare logs.
/// Throws ValidationError if the config hash does not match.
ReplayReport replay_run(const std::string& log_bytes, const std::string& config_document,
                        const std::string& select = "");

} // namespace patriot

#endif
