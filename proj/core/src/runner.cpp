#include "patriot/runner.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>

#include "patriot/errors.hpp"

namespace patriot {

// ---------------------------------------------------------------------------
// Statuses and verdicts

std::string to_string(StepStatus s) {
    switch (s) {
    case StepStatus::Passed: return "Passed";
    case StepStatus::Warning: return "Warning";
    case StepStatus::Failed: return "Failed";
    case StepStatus::Broken: return "Broken";
    case StepStatus::Skipped: return "Skipped";
    }
    return "";
}

StepStatus step_status_from_string(const std::string& s) {
    if (s == "Passed") return StepStatus::Passed;
    if (s == "Warning") return StepStatus::Warning;
    if (s == "Failed") return StepStatus::Failed;
    if (s == "Broken") return StepStatus::Broken;
    if (s == "Skipped") return StepStatus::Skipped;
    throw ValidationError("unknown step status '" + s + "'");
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Passed: return "Passed";
    case Verdict::PassedWithWarnings: return "PassedWithWarnings";
    case Verdict::Failed: return "Failed";
    case Verdict::Broken: return "Broken";
    }
    return "";
}

Verdict aggregate_verdict(const std::vector<StepStatus>& statuses) {
    bool broken = false, failed = false, warned = false;
    for (auto s : statuses) {
        if (s == StepStatus::Broken) broken = true;
        else if (s == StepStatus::Failed) failed = true;
        else if (s == StepStatus::Warning) warned = true;
    }
    if (broken) return Verdict::Broken;
    if (failed) return Verdict::Failed;
    if (warned) return Verdict::PassedWithWarnings;
    return Verdict::Passed;
}

bool Comparator::matches(const Json& value) const {
    if (value.is_number() && literal.is_number()) {
        double a = value.get<double>(), b = literal.get<double>();
        if (op == "=") return a == b;
        if (op == "!=") return a != b;
        if (op == "<") return a < b;
        if (op == ">") return a > b;
        return false;
    }
    if (value.is_string() && literal.is_string()) {
        const auto& a = value.get_ref<const std::string&>();
        const auto& b = literal.get_ref<const std::string&>();
        if (op == "=") return a == b;
        if (op == "!=") return a != b;
        if (op == "<") return a < b;
        if (op == ">") return a > b;
        return false;
    }
    if (value.is_boolean() && literal.is_boolean()) {
        if (op == "=") return value == literal;
        if (op == "!=") return value != literal;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Suite (de)serialization

namespace {

Comparator comparator_from_json(const Json& j) {
    Comparator c;
    c.op = j.at("op").get<std::string>();
    if (c.op != "=" && c.op != "!=" && c.op != "<" && c.op != ">") {
        throw ValidationError("comparator: op must be one of = != < >");
    }
    c.literal = j.at("literal");
    return c;
}

Json comparator_to_json(const Comparator& c) {
    return Json{{"op", c.op}, {"literal", c.literal}};
}

} // namespace

TestStep TestStep::from_json(const Json& j) {
    TestStep s;
    s.kind = j.at("kind").get<std::string>();
    s.critical = j.value("critical", true);
    if (s.kind == "invoke-actuator") {
        s.device = j.at("device").get<std::string>();
        s.endpoint = j.at("endpoint").get<std::string>();
        if (j.contains("fields")) {
            for (auto it = j["fields"].begin(); it != j["fields"].end(); ++it) {
                s.fields[it.key()] = it.value();
            }
        }
    } else if (s.kind == "await-datapoint") {
        s.device = j.at("device").get<std::string>();
        s.label = j.at("label").get<std::string>();
        if (j.contains("comparator") && !j["comparator"].is_null()) {
            s.comparator = comparator_from_json(j["comparator"]);
        }
        s.timeout_ms = j.at("timeout_ms").get<SimTime>();
        if (s.timeout_ms <= 0) {
            throw ValidationError("await-datapoint: timeout_ms must be > 0");
        }
        if (j.contains("warn_after_ms") && !j["warn_after_ms"].is_null()) {
            s.warn_after_ms = j["warn_after_ms"].get<SimTime>();
        }
    } else if (s.kind == "inject") {
        s.action = HubAction::from_json(j.at("action"));
    } else if (s.kind == "assert-state") {
        s.device = j.at("device").get<std::string>();
        s.expected = j.at("expected").get<std::string>();
    } else if (s.kind == "warn-if") {
        s.cond_field = j.at("field").get<std::string>();
        s.condition = comparator_from_json(j.at("comparator"));
        s.detail = j.value("detail", std::string());
    } else if (s.kind == "sleep") {
        s.ms = j.at("ms").get<SimTime>();
    } else if (s.kind == "parallel") {
        for (const auto& branch : j.at("branches")) {
            std::vector<TestStep> steps;
            for (const auto& stepj : branch) steps.push_back(TestStep::from_json(stepj));
            s.branches.push_back(std::move(steps));
        }
        if (s.branches.empty()) {
            throw ValidationError("parallel: branches must be non-empty");
        }
    } else if (s.kind == "sync-point") {
        // no fields
    } else {
        throw ValidationError("step: unknown kind '" + s.kind + "'");
    }
    return s;
}

Json TestStep::to_json() const {
    Json j;
    j["kind"] = kind;
    if (kind == "invoke-actuator") {
        j["device"] = device;
        j["endpoint"] = endpoint;
        Json f = Json::object();
        for (const auto& [k, v] : fields) f[k] = v;
        j["fields"] = f;
    } else if (kind == "await-datapoint") {
        j["device"] = device;
        j["label"] = label;
        if (comparator) j["comparator"] = comparator_to_json(*comparator);
        j["timeout_ms"] = timeout_ms;
        if (warn_after_ms) j["warn_after_ms"] = *warn_after_ms;
    } else if (kind == "inject") {
        j["action"] = action->to_json();
    } else if (kind == "assert-state") {
        j["device"] = device;
        j["expected"] = expected;
    } else if (kind == "warn-if") {
        j["field"] = cond_field;
        j["comparator"] = comparator_to_json(*condition);
        if (!detail.empty()) j["detail"] = detail;
    } else if (kind == "sleep") {
        j["ms"] = ms;
    } else if (kind == "parallel") {
        Json bs = Json::array();
        for (const auto& branch : branches) {
            Json b = Json::array();
            for (const auto& st : branch) b.push_back(st.to_json());
            bs.push_back(std::move(b));
        }
        j["branches"] = bs;
    }
    j["critical"] = critical;
    return j;
}

TestSuite TestSuite::from_json(const Json& j) {
    TestSuite suite;
    suite.name = j.at("name").get<std::string>();
    std::set<std::string> names;
    for (const auto& cj : j.at("cases")) {
        TestCase c;
        c.name = cj.at("name").get<std::string>();
        if (!names.insert(c.name).second) {
            throw ValidationError("suite '" + suite.name + "': duplicate case name '" +
                                  c.name + "'");
        }
        c.params_from = cj.value("params_from", std::string());
        for (const auto& sj : cj.at("steps")) c.steps.push_back(TestStep::from_json(sj));
        suite.cases.push_back(std::move(c));
    }
    return suite;
}

Json TestSuite::to_json() const {
    Json j;
    j["name"] = name;
    Json cs = Json::array();
    for (const auto& c : cases) {
        Json cj;
        cj["name"] = c.name;
        if (!c.params_from.empty()) cj["params_from"] = c.params_from;
        Json steps = Json::array();
        for (const auto& s : c.steps) steps.push_back(s.to_json());
        cj["steps"] = steps;
        cs.push_back(std::move(cj));
    }
    j["cases"] = cs;
    return j;
}

// ---------------------------------------------------------------------------
// Datatables

std::vector<Json> load_datatable(const std::string& document) {
    std::istringstream in(document);
    std::string line;
    if (!std::getline(in, line) || line.empty()) {
        throw ValidationError("datatable: missing header row");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            auto comma = s.find(',', pos);
            if (comma == std::string::npos) {
                cells.push_back(s.substr(pos));
                break;
            }
            cells.push_back(s.substr(pos, comma - pos));
            pos = comma + 1;
        }
        return cells;
    };
    std::vector<std::string> header = split(line);

    auto typed = [](const std::string& cell) -> Json {
        if (cell == "true") return true;
        if (cell == "false") return false;
        if (!cell.empty()) {
            char* end = nullptr;
            double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() + cell.size()) {
                if (v == std::floor(v) && std::abs(v) < 9.0e15 &&
                    cell.find_first_of(".eE") == std::string::npos) {
                    return static_cast<std::int64_t>(v);
                }
                return v;
            }
        }
        return cell;
    };

    std::vector<Json> rows;
    int rowno = 1;
    while (std::getline(in, line)) {
        ++rowno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size()) {
            throw ValidationError("datatable: row " + std::to_string(rowno) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        }
        Json row = Json::object();
        for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = typed(cells[i]);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

void substitute_params(Json& j, const Json& row) {
    if (j.is_object() || j.is_array()) {
        for (auto& el : j) substitute_params(el, row);
        return;
    }
    if (!j.is_string()) return;
    std::string s = j.get<std::string>();
    // A placeholder that is the whole string keeps the row value's type.
    if (s.size() > 3 && s.rfind("${", 0) == 0 && s.back() == '}') {
        std::string key = s.substr(2, s.size() - 3);
        if (row.contains(key)) {
            j = row[key];
            return;
        }
    }
    std::size_t pos = 0;
    while ((pos = s.find("${", pos)) != std::string::npos) {
        auto close = s.find('}', pos);
        if (close == std::string::npos) break;
        std::string key = s.substr(pos + 2, close - pos - 2);
        if (row.contains(key)) {
            const Json& v = row[key];
            std::string text = v.is_string() ? v.get<std::string>() : v.dump();
            s.replace(pos, close - pos + 1, text);
            pos += text.size();
        } else {
            pos = close + 1;
        }
    }
    j = s;
}

} // namespace

TestSuite expand_suite(const TestSuite& suite, const DatatableLoader& loader) {
    TestSuite out;
    out.name = suite.name;
    for (const auto& c : suite.cases) {
        if (c.params_from.empty()) {
            out.cases.push_back(c);
            continue;
        }
        if (!loader) {
            throw ValidationError("suite '" + suite.name + "': case '" + c.name +
                                  "' needs datatable '" + c.params_from +
                                  "' but no loader was provided");
        }
        std::vector<Json> rows = loader(c.params_from);
        int i = 0;
        for (const auto& row : rows) {
            TestCase inst;
            inst.name = c.name + "[" + std::to_string(i++) + "]";
            for (const auto& step : c.steps) {
                Json sj = step.to_json();
                substitute_params(sj, row);
                inst.steps.push_back(TestStep::from_json(sj));
            }
            out.cases.push_back(std::move(inst));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Step driver

namespace {

struct CaseCtx {
    Testbed& tb;
    Json last_response;
    std::optional<DataPoint> last_datapoint;
};

class BranchRunner;

struct SyncGroup {
    std::vector<BranchRunner*> members;
    void check_release();
};

struct ParallelState;

/// Executes one list of steps; parallel steps spawn child runners that
/// interleave deterministically on the sim loop.
class BranchRunner {
public:
    using Emit = std::function<void(const TestStep&, const StepOutcome&)>;

    BranchRunner(CaseCtx& ctx, const std::vector<TestStep>& steps, Emit emit,
                 std::function<void()> on_done)
        : ctx_(ctx), steps_(&steps), emit_(std::move(emit)),
          on_done_(std::move(on_done)) {}

    void start() { run_next(); }

    bool done() const { return done_; }
    bool waiting_at_sync() const { return at_sync_; }
    void set_group(SyncGroup* g) { group_ = g; }

    bool saw_broken = false;
    bool saw_failed_critical = false;
    bool saw_warning = false;

    void release_sync() {
        at_sync_ = false;
        finish(*sync_step_, StepStatus::Passed, "", sync_started_);
    }

private:
    void run_next();
    void finish(const TestStep& step, StepStatus status, std::string detail,
                SimTime started);

    void exec_invoke(const TestStep& step, SimTime started);
    void exec_await(const TestStep& step, SimTime started);
    void exec_inject(const TestStep& step, SimTime started);
    void exec_assert_state(const TestStep& step, SimTime started);
    void exec_warn_if(const TestStep& step, SimTime started);
    void exec_parallel(const TestStep& step, SimTime started);

    CaseCtx& ctx_;
    const std::vector<TestStep>* steps_;
    std::size_t idx_ = 0;
    bool skipping_ = false;
    bool done_ = false;
    bool at_sync_ = false;
    const TestStep* sync_step_ = nullptr;
    SimTime sync_started_ = 0;
    SyncGroup* group_ = nullptr;
    Emit emit_;
    std::function<void()> on_done_;
    std::unique_ptr<ParallelState> par_;
};

struct ParallelState {
    SyncGroup group;
    std::vector<std::unique_ptr<BranchRunner>> children;
    std::size_t remaining = 0;
};

void SyncGroup::check_release() {
    bool any_waiting = false;
    for (auto* m : members) {
        if (m->waiting_at_sync()) any_waiting = true;
        else if (!m->done()) return;
    }
    if (!any_waiting) return;
    for (auto* m : members) {
        if (m->waiting_at_sync()) m->release_sync();
    }
}

void BranchRunner::run_next() {
    if (idx_ >= steps_->size()) {
        done_ = true;
        if (group_) group_->check_release();
        if (on_done_) on_done_();
        return;
    }
    const TestStep& step = (*steps_)[idx_++];
    SimTime started = ctx_.tb.loop().now();

    if (skipping_) {
        finish(step, StepStatus::Skipped, "", started);
        return;
    }

    if (step.kind == "invoke-actuator") {
        exec_invoke(step, started);
    } else if (step.kind == "await-datapoint") {
        exec_await(step, started);
    } else if (step.kind == "inject") {
        exec_inject(step, started);
    } else if (step.kind == "assert-state") {
        exec_assert_state(step, started);
    } else if (step.kind == "warn-if") {
        exec_warn_if(step, started);
    } else if (step.kind == "sleep") {
        ctx_.tb.loop().schedule(started + step.ms, [this, &step, started] {
            finish(step, StepStatus::Passed, "", started);
        });
    } else if (step.kind == "sync-point") {
        if (!group_) {
            finish(step, StepStatus::Passed, "", started);
        } else {
            at_sync_ = true;
            sync_step_ = &step;
            sync_started_ = started;
            group_->check_release();
        }
    } else if (step.kind == "parallel") {
        exec_parallel(step, started);
    } else {
        finish(step, StepStatus::Broken, "unknown step kind '" + step.kind + "'", started);
    }
}

void BranchRunner::finish(const TestStep& step, StepStatus status, std::string detail,
                          SimTime started) {
    StepOutcome o;
    o.status = status;
    o.detail = std::move(detail);
    o.started_at = started;
    o.ended_at = ctx_.tb.loop().now();
    emit_(step, o);

    if (status == StepStatus::Broken) saw_broken = true;
    if (status == StepStatus::Failed && step.critical) saw_failed_critical = true;
    if (status == StepStatus::Warning) saw_warning = true;
    if (status == StepStatus::Broken || (status == StepStatus::Failed && step.critical)) {
        skipping_ = true;
    }
    // Continue on the loop so parallel branches interleave at step
    // boundaries in scheduling order.
    ctx_.tb.loop().schedule(ctx_.tb.loop().now(), [this] { run_next(); });
}

void BranchRunner::exec_invoke(const TestStep& step, SimTime started) {
    auto settled = std::make_shared<bool>(false);
    auto timeout = std::make_shared<SimLoop::Handle>();
    ActuatorRequest req;
    req.endpoint = step.endpoint;
    req.fields = step.fields;
    bool known = ctx_.tb.invoke_actuator(
        step.device, req,
        [this, settled, timeout, &step, started](const Json& resp) {
            if (*settled) return;
            *settled = true;
            ctx_.tb.loop().cancel(*timeout);
            ctx_.last_response = resp;
            if (resp.value("status", std::string()) == "ok") {
                finish(step, StepStatus::Passed, "", started);
            } else {
                finish(step, StepStatus::Failed,
                       resp.value("reason", std::string("error")), started);
            }
        });
    if (!known) {
        *settled = true;
        finish(step, StepStatus::Broken, "unknown device '" + step.device + "'", started);
        return;
    }
    *timeout = ctx_.tb.loop().schedule(
        started + kResponseTimeoutMs, [this, settled, &step, started] {
            if (*settled) return;
            *settled = true;
            finish(step, StepStatus::Broken,
                   "no response within " + std::to_string(kResponseTimeoutMs) + " ms",
                   started);
        });
}

void BranchRunner::exec_await(const TestStep& step, SimTime started) {
    auto settled = std::make_shared<bool>(false);
    auto timeout = std::make_shared<SimLoop::Handle>();
    auto hook_id = std::make_shared<int>(-1);
    *hook_id = ctx_.tb.add_datapoint_hook(
        [this, settled, timeout, hook_id, &step, started](const DataPoint& dp) {
            if (*settled) return;
            if (dp.device != step.device || dp.label != step.label) return;
            if (step.comparator) {
                if (!std::holds_alternative<double>(dp.value)) return;
                if (!step.comparator->matches(Json(std::get<double>(dp.value)))) return;
            }
            *settled = true;
            ctx_.tb.loop().cancel(*timeout);
            ctx_.tb.remove_datapoint_hook(*hook_id);
            ctx_.last_datapoint = dp;
            SimTime now = ctx_.tb.loop().now();
            if (step.warn_after_ms && now - started > *step.warn_after_ms) {
                finish(step, StepStatus::Warning,
                       "matched after soft threshold " +
                           std::to_string(*step.warn_after_ms) + " ms",
                       started);
            } else {
                finish(step, StepStatus::Passed, "", started);
            }
        });
    *timeout = ctx_.tb.loop().schedule(
        started + step.timeout_ms, [this, settled, hook_id, &step, started] {
            if (*settled) return;
            *settled = true;
            ctx_.tb.remove_datapoint_hook(*hook_id);
            finish(step, StepStatus::Failed,
                   "timeout after " + std::to_string(step.timeout_ms) + " ms", started);
        });
}

void BranchRunner::exec_inject(const TestStep& step, SimTime started) {
    try {
        ctx_.tb.hub_dispatch(*step.action);
        finish(step, StepStatus::Passed, "", started);
    } catch (const std::runtime_error& e) {
        finish(step, StepStatus::Broken, e.what(), started);
    }
}

void BranchRunner::exec_assert_state(const TestStep& step, SimTime started) {
    auto state = ctx_.tb.actuator_state(step.device);
    if (!state) {
        finish(step, StepStatus::Broken, "unknown device '" + step.device + "'", started);
    } else if (*state == step.expected) {
        finish(step, StepStatus::Passed, "", started);
    } else {
        finish(step, StepStatus::Failed,
               "state '" + *state + "' != expected '" + step.expected + "'", started);
    }
}

void BranchRunner::exec_warn_if(const TestStep& step, SimTime started) {
    Json value; // null when no context is available
    if (step.cond_field == "value") {
        if (ctx_.last_datapoint && std::holds_alternative<double>(ctx_.last_datapoint->value)) {
            value = std::get<double>(ctx_.last_datapoint->value);
        }
    } else if (step.cond_field.rfind("data.", 0) == 0) {
        std::string key = step.cond_field.substr(5);
        if (ctx_.last_response.is_object() && ctx_.last_response.contains("data") &&
            ctx_.last_response["data"].contains(key)) {
            value = ctx_.last_response["data"][key];
        }
    } else if (ctx_.last_response.is_object() &&
               ctx_.last_response.contains(step.cond_field)) {
        value = ctx_.last_response[step.cond_field];
    }
    bool triggered = !value.is_null() && step.condition->matches(value);
    if (triggered) {
        finish(step, StepStatus::Warning,
               step.detail.empty() ? "condition held on '" + step.cond_field + "'"
                                   : step.detail,
               started);
    } else {
        finish(step, StepStatus::Passed, "", started);
    }
}

void BranchRunner::exec_parallel(const TestStep& step, SimTime started) {
    par_ = std::make_unique<ParallelState>();
    par_->remaining = step.branches.size();
    for (const auto& branch : step.branches) {
        auto child = std::make_unique<BranchRunner>(
            ctx_, branch, emit_, [this, &step, started] {
                if (--par_->remaining > 0) return;
                StepStatus agg = StepStatus::Passed;
                for (const auto& c : par_->children) {
                    if (c->saw_broken) agg = StepStatus::Broken;
                }
                if (agg == StepStatus::Passed) {
                    for (const auto& c : par_->children) {
                        if (c->saw_failed_critical) agg = StepStatus::Failed;
                    }
                }
                if (agg == StepStatus::Passed) {
                    for (const auto& c : par_->children) {
                        if (c->saw_warning) agg = StepStatus::Warning;
                    }
                }
                finish(step, agg,
                       agg == StepStatus::Passed ? "" : "aggregated from branches",
                       started);
            });
        child->set_group(&par_->group);
        par_->group.members.push_back(child.get());
        par_->children.push_back(std::move(child));
    }
    for (auto& child : par_->children) child->start();
}

} // namespace

// ---------------------------------------------------------------------------
// Suite execution

namespace {

CaseResult run_case(Testbed& tb, const TestCase& tcase) {
    CaseCtx ctx{tb};
    CaseResult result;
    result.name = tcase.name;
    result.started_at = tb.loop().now();
    tb.log().record(result.started_at, "test-event",
                    Json{{"event", "case-started"}, {"case", tcase.name}});

    bool done = false;
    BranchRunner root(
        ctx, tcase.steps,
        [&](const TestStep& step, const StepOutcome& o) {
            result.outcomes.push_back(o);
            tb.log().record(o.ended_at, "test-event",
                            Json{{"event", "step-finished"},
                                 {"case", tcase.name},
                                 {"kind", step.kind},
                                 {"status", to_string(o.status)},
                                 {"detail", o.detail},
                                 {"started_at", o.started_at},
                                 {"ended_at", o.ended_at}});
        },
        [&] { done = true; });
    root.start();
    while (!done) {
        if (!tb.loop().run_one()) break;
    }
    result.ended_at = tb.loop().now();
    std::vector<StepStatus> statuses;
    for (const auto& o : result.outcomes) statuses.push_back(o.status);
    tb.log().record(result.ended_at, "test-event",
                    Json{{"event", "case-finished"},
                         {"case", tcase.name},
                         {"verdict", to_string(aggregate_verdict(statuses))}});
    return result;
}

} // namespace

SuiteResult run_suite(Testbed& testbed, const TestSuite& suite,
                      const DatatableLoader& loader) {
    TestSuite expanded = expand_suite(suite, loader);
    testbed.log().record(testbed.loop().now(), "test-event",
                         Json{{"event", "suite-loaded"}, {"suite", expanded.to_json()}});
    SuiteResult result;
    result.suite_name = expanded.name;
    result.seed = testbed.seed();
    result.config_hash = testbed.log().config_hash();
    std::vector<StepStatus> statuses;
    for (const auto& c : expanded.cases) {
        CaseResult cr = run_case(testbed, c);
        for (const auto& o : cr.outcomes) statuses.push_back(o.status);
        result.cases.push_back(std::move(cr));
    }
    result.verdict = aggregate_verdict(statuses);
    testbed.log().record(testbed.loop().now(), "test-event",
                         Json{{"event", "suite-finished"},
                              {"suite", expanded.name},
                              {"verdict", to_string(result.verdict)}});
    return result;
}

// ---------------------------------------------------------------------------
// Performance runner

double percentile(std::vector<double> samples, int p) {
    if (samples.empty()) {
        throw ValidationError("percentile: samples must be non-empty");
    }
    if (p < 1 || p > 100) {
        throw ValidationError("percentile: p must be in 1..100");
    }
    std::sort(samples.begin(), samples.end());
    std::size_t n = samples.size();
    std::size_t rank = (static_cast<std::size_t>(p) * n + 99) / 100; // ceil(p/100*N)
    return samples[rank - 1];
}

PerfSpec PerfSpec::from_json(const Json& j) {
    PerfSpec s;
    s.device = j.at("device").get<std::string>();
    s.endpoint = j.at("endpoint").get<std::string>();
    s.rate_per_s = j.at("rate_per_s").get<double>();
    s.duration_ms = j.at("duration_ms").get<SimTime>();
    if (j.contains("fields")) {
        for (auto it = j["fields"].begin(); it != j["fields"].end(); ++it) {
            s.fields[it.key()] = it.value();
        }
    }
    return s;
}

Json PerfSpec::to_json() const {
    Json j;
    j["device"] = device;
    j["endpoint"] = endpoint;
    j["rate_per_s"] = rate_per_s;
    j["duration_ms"] = duration_ms;
    Json f = Json::object();
    for (const auto& [k, v] : fields) f[k] = v;
    j["fields"] = f;
    return j;
}

Json PerfMetrics::to_json() const {
    Json j;
    j["sent"] = sent;
    j["ok"] = ok;
    j["error"] = error;
    j["timeout"] = timeout;
    j["throughput_ok_per_s"] = throughput_ok_per_s;
    j["latency_p50"] = latency_p50;
    j["latency_p95"] = latency_p95;
    j["latency_p99"] = latency_p99;
    j["latency_max"] = latency_max;
    return j;
}

PerfMetrics run_perf(Testbed& testbed, const PerfSpec& spec) {
    if (spec.rate_per_s <= 0.0) {
        throw ValidationError("perf: rate_per_s must be > 0");
    }
    if (spec.duration_ms <= 0) {
        throw ValidationError("perf: duration_ms must be > 0");
    }
    if (!testbed.actuator_state(spec.device)) {
        throw ValidationError("perf: unknown target device '" + spec.device + "'");
    }
    testbed.log().record(testbed.loop().now(), "test-event",
                         Json{{"event", "perf-spec"}, {"spec", spec.to_json()}});

    SimTime base = testbed.loop().now();
    PerfMetrics m;
    std::vector<double> latencies;
    std::vector<std::shared_ptr<bool>> settled_flags;

    ActuatorRequest req;
    req.endpoint = spec.endpoint;
    req.fields = spec.fields;

    for (std::int64_t k = 0;; ++k) {
        // Open loop at nearest-ms multiples of 1000/rate.
        SimTime offset = static_cast<SimTime>(
            std::llround(static_cast<double>(k) * 1000.0 / spec.rate_per_s));
        if (offset >= spec.duration_ms) break;
        SimTime at = base + offset;
        auto settled = std::make_shared<bool>(false);
        settled_flags.push_back(settled);
        ++m.sent;
        testbed.loop().schedule(
            at, [&testbed, &m, &latencies, settled, req, at, device = spec.device] {
                testbed.invoke_actuator(
                    device, req,
                    [&testbed, &m, &latencies, settled, at](const Json& resp) {
                        if (*settled) return;
                        *settled = true;
                        if (resp.value("status", std::string()) == "ok") {
                            ++m.ok;
                            latencies.push_back(
                                static_cast<double>(testbed.loop().now() - at));
                        } else {
                            ++m.error;
                        }
                    });
            });
    }

    testbed.loop().run_until(base + spec.duration_ms + kResponseTimeoutMs);
    for (auto& flag : settled_flags) {
        if (!*flag) {
            *flag = true;
            ++m.timeout;
        }
    }

    m.throughput_ok_per_s =
        static_cast<double>(m.ok) / (static_cast<double>(spec.duration_ms) / 1000.0);
    if (!latencies.empty()) {
        m.latency_p50 = percentile(latencies, 50);
        m.latency_p95 = percentile(latencies, 95);
        m.latency_p99 = percentile(latencies, 99);
        m.latency_max = *std::max_element(latencies.begin(), latencies.end());
    }
    testbed.log().record(testbed.loop().now(), "test-event",
                         Json{{"event", "perf-finished"}, {"metrics", m.to_json()}});
    return m;
}

// ---------------------------------------------------------------------------
// Replay

ReplayReport replay_run(const std::string& log_bytes, const std::string& config_document,
                        const std::string& select) {
    CollectorLog original = CollectorLog::from_plog(log_bytes);
    if (original.config_hash() != config_hash(config_document)) {
        throw ValidationError("replay: config hash mismatch (log " +
                              original.config_hash() + ", document " +
                              config_hash(config_document) + ")");
    }
    TestbedConfig cfg = load_config(config_document, select);
    Testbed tb(cfg, original.seed());

    // Re-execute every recorded run, in recording order.
    for (const auto& rec : original.records()) {
        if (rec.kind != "test-event") continue;
        std::string event = rec.body.value("event", std::string());
        if (event == "suite-loaded") {
            run_suite(tb, TestSuite::from_json(rec.body.at("suite")));
        } else if (event == "perf-spec") {
            run_perf(tb, PerfSpec::from_json(rec.body.at("spec")));
        }
    }
    tb.log().finalize();

    auto divergences = diff_logs(original, tb.log());
    ReplayReport report;
    report.identical = divergences.empty();
    if (!divergences.empty()) report.first_divergence = divergences.front().seq;
    return report;
}

} // namespace patriot
