#include <doctest.h>

#include <algorithm>

#include "patriot/demo.hpp"
#include "patriot/errors.hpp"
#include "patriot/runner.hpp"
#include "support/reference.hpp"

using namespace patriot;

namespace {

TestbedConfig runner_config() {
    TestbedConfig cfg;
    cfg.name = "runner";
    cfg.topology.nodes = {{"dev", NodeKind::Device}, {"hub", NodeKind::Gateway}};
    cfg.topology.links = {{"dev", "hub", 10, 0.0, std::nullopt, true}};

    ProviderSpec p;
    p.device_id = "dev";
    p.label = "temperature";
    p.generator.kind = GeneratorSpec::Kind::Constant;
    p.generator.value = 21.5;
    p.period_ms = 100;
    p.connector.kind = ConnectorSpec::Kind::InSim;
    p.connector.via_node = "dev";
    p.connector.sink_node = "hub";
    cfg.providers = {p};

    ActuatorSpec echo;
    echo.device_id = "echo";
    echo.endpoints = {{"ping", {}}};
    echo.machine.states = {"idle"};
    echo.machine.initial = "idle";
    echo.machine.transitions = {{"idle", "ping", std::nullopt, "idle", {}}};
    echo.connector.kind = ConnectorSpec::Kind::InSim;
    echo.connector.via_node = "dev";
    echo.connector.sink_node = "hub";
    cfg.actuators = {echo};
    return cfg;
}

TestStep await_temp(const std::string& op, double lit, SimTime timeout) {
    TestStep s;
    s.kind = "await-datapoint";
    s.device = "dev";
    s.label = "temperature";
    s.comparator = Comparator{op, Json(lit)};
    s.timeout_ms = timeout;
    return s;
}

TestStep ping() {
    TestStep s;
    s.kind = "invoke-actuator";
    s.device = "echo";
    s.endpoint = "ping";
    return s;
}

StepStatus oracle_random_status(RngStream& rng) {
    switch (rng.next_u64() % 5) {
    case 0: return StepStatus::Passed;
    case 1: return StepStatus::Warning;
    case 2: return StepStatus::Failed;
    case 3: return StepStatus::Broken;
    default: return StepStatus::Skipped;
    }
}

} // namespace

TEST_SUITE("runner") {

TEST_CASE("verdict aggregation precedence") {
    CHECK(aggregate_verdict({}) == Verdict::Passed);
    CHECK(aggregate_verdict({StepStatus::Passed, StepStatus::Skipped}) == Verdict::Passed);
    CHECK(aggregate_verdict({StepStatus::Warning}) == Verdict::PassedWithWarnings);
    CHECK(aggregate_verdict({StepStatus::Warning, StepStatus::Failed}) == Verdict::Failed);
    CHECK(aggregate_verdict({StepStatus::Failed, StepStatus::Broken}) == Verdict::Broken);

    RngStream rng = RngStream::derived(5, "verdicts");
    for (int i = 0; i < 1000; ++i) {
        std::vector<StepStatus> v;
        int n = 1 + static_cast<int>(rng.next_u64() % 8);
        for (int j = 0; j < n; ++j) v.push_back(oracle_random_status(rng));
        Verdict want = Verdict::Passed;
        for (auto s : v) {
            if (s == StepStatus::Broken) want = Verdict::Broken;
            else if (s == StepStatus::Failed && want != Verdict::Broken)
                want = Verdict::Failed;
            else if (s == StepStatus::Warning &&
                     (want == Verdict::Passed || want == Verdict::PassedWithWarnings))
                want = Verdict::PassedWithWarnings;
        }
        CHECK(aggregate_verdict(v) == want);
    }
}

TEST_CASE("datatable parsing") {
    auto rows = load_datatable("temp,mode\n21,eco\n22.5,true\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0]["temp"] == 21);
    CHECK(rows[0]["temp"].is_number_integer());
    CHECK(rows[0]["mode"] == "eco");
    CHECK(rows[1]["temp"] == 22.5);
    CHECK(rows[1]["mode"] == true);

    CHECK_THROWS_AS(load_datatable(""), ValidationError);
    try {
        load_datatable("a,b\n1\n");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("parameter expansion substitutes ${name}") {
    TestSuite suite;
    suite.name = "s";
    TestCase c;
    c.name = "check";
    c.params_from = "table.csv";
    TestStep s = await_temp(">", 0, 1000);
    s.comparator->literal = Json("${limit}");
    c.steps = {s};
    suite.cases = {c};

    auto loader = [](const std::string&) {
        return std::vector<Json>{Json{{"limit", 20}}, Json{{"limit", 25}}};
    };
    TestSuite out = expand_suite(suite, loader);
    REQUIRE(out.cases.size() == 2);
    CHECK(out.cases[0].name != out.cases[1].name);
    CHECK(out.cases[0].steps[0].comparator->literal == 20);
    CHECK(out.cases[1].steps[0].comparator->literal == 25);
}

TEST_CASE("await passes on a matching datapoint and fails on timeout") {
    TestbedConfig cfg = runner_config();
    Testbed tb(cfg, 1);
    TestSuite suite;
    suite.name = "await";
    suite.cases = {{"pass", "", {await_temp(">", 20, 1000)}},
                   {"fail", "", {await_temp(">", 25, 500)}}};
    SuiteResult r = run_suite(tb, suite);
    CHECK(r.verdict == Verdict::Failed);
    REQUIRE(r.cases.size() == 2);
    CHECK(r.cases[0].outcomes[0].status == StepStatus::Passed);
    // first emission at 100, delivered at 110
    CHECK(r.cases[0].outcomes[0].ended_at == 110);
    CHECK(r.cases[1].outcomes[0].status == StepStatus::Failed);
    CHECK(r.cases[1].outcomes[0].ended_at - r.cases[1].outcomes[0].started_at == 500);
}

TEST_CASE("critical failure skips the rest of the case") {
    TestbedConfig cfg = runner_config();
    Testbed tb(cfg, 1);
    TestStep fail = await_temp(">", 100, 200);
    TestSuite suite;
    suite.name = "skip";
    suite.cases = {{"c", "", {ping(), fail, ping(), ping()}}};
    SuiteResult r = run_suite(tb, suite);
    CHECK(r.verdict == Verdict::Failed);
    auto& o = r.cases[0].outcomes;
    REQUIRE(o.size() == 4);
    CHECK(o[0].status == StepStatus::Passed);
    CHECK(o[1].status == StepStatus::Failed);
    CHECK(o[2].status == StepStatus::Skipped);
    CHECK(o[3].status == StepStatus::Skipped);
}

TEST_CASE("non-critical failure does not skip") {
    TestbedConfig cfg = runner_config();
    Testbed tb(cfg, 1);
    TestStep fail = await_temp(">", 100, 200);
    fail.critical = false;
    TestSuite suite;
    suite.name = "soft";
    suite.cases = {{"c", "", {fail, ping()}}};
    SuiteResult r = run_suite(tb, suite);
    CHECK(r.verdict == Verdict::Failed);
    CHECK(r.cases[0].outcomes[1].status == StepStatus::Passed);
}

TEST_CASE("unknown device breaks the case instead of crashing") {
    TestbedConfig cfg = runner_config();
    Testbed tb(cfg, 1);
    TestStep bad = ping();
    bad.device = "ghost";
    TestSuite suite;
    suite.name = "broken";
    suite.cases = {{"c", "", {bad, ping()}}};
    SuiteResult r = run_suite(tb, suite);
    CHECK(r.verdict == Verdict::Broken);
    CHECK(r.cases[0].outcomes[0].status == StepStatus::Broken);
    CHECK(r.cases[0].outcomes[1].status == StepStatus::Skipped);
}

TEST_CASE("invoking a detached device breaks after the hard timeout") {
    TestbedConfig cfg = runner_config();
    Testbed tb(cfg, 1);
    TestStep detach;
    detach.kind = "inject";
    HubAction act;
    act.kind = "detach-device";
    act.device_id = "echo";
    detach.action = act;
    TestSuite suite;
    suite.name = "detached";
    suite.cases = {{"c", "", {detach, ping(), ping()}}};
    SuiteResult r = run_suite(tb, suite);
    CHECK(r.verdict == Verdict::Broken);
    auto& o = r.cases[0].outcomes;
    CHECK(o[1].status == StepStatus::Broken);
    CHECK(o[1].ended_at - o[1].started_at == kResponseTimeoutMs);
    CHECK(o[2].status == StepStatus::Skipped);
}

TEST_CASE("warn-if on the last datapoint value") {
    TestbedConfig cfg = runner_config();
    Testbed tb(cfg, 1);
    TestStep warn;
    warn.kind = "warn-if";
    warn.cond_field = "value";
    warn.condition = Comparator{">", Json(20)};
    warn.detail = "too warm";
    TestSuite suite;
    suite.name = "warn";
    suite.cases = {{"c", "", {await_temp(">", 0, 1000), warn}}};
    SuiteResult r = run_suite(tb, suite);
    CHECK(r.verdict == Verdict::PassedWithWarnings);
    CHECK(r.cases[0].outcomes[1].status == StepStatus::Warning);
    CHECK(r.cases[0].outcomes[1].detail == "too warm");
}

TEST_CASE("parallel branches meet at the sync point") {
    TestbedConfig cfg = runner_config();
    Testbed tb(cfg, 1);
    TestStep par;
    par.kind = "parallel";
    TestStep sleep100, sleep300, sync;
    sleep100.kind = "sleep";
    sleep100.ms = 100;
    sleep300.kind = "sleep";
    sleep300.ms = 300;
    sync.kind = "sync-point";
    par.branches = {{sleep100, sync}, {sleep300, sync}};
    TestSuite suite;
    suite.name = "par";
    suite.cases = {{"c", "", {par}}};
    SuiteResult r = run_suite(tb, suite);
    CHECK(r.verdict == Verdict::Passed);
    // branch steps are reported too; the parallel aggregate comes last
    CHECK(r.cases[0].outcomes.back().ended_at == 300);
    int at_300 = 0;
    for (const auto& o : r.cases[0].outcomes) {
        CHECK(o.status == StepStatus::Passed);
        if (o.ended_at == 300) ++at_300;
    }
    CHECK(at_300 >= 3); // sleep 300 and both sync releases land at t=300
}

TEST_CASE("suite and step schemas round-trip") {
    TestSuite suite;
    suite.name = "s";
    suite.cases = {{"a", "", {ping(), await_temp(">", 1, 50)}}};
    TestSuite back = TestSuite::from_json(suite.to_json());
    CHECK(back.to_json() == suite.to_json());

    Json dup = suite.to_json();
    dup["cases"].push_back(dup["cases"][0]);
    CHECK_THROWS_AS(TestSuite::from_json(dup), ValidationError);
}

TEST_CASE("percentile nearest rank") {
    std::vector<double> deciles{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    CHECK(percentile(deciles, 95) == 100);
    CHECK(percentile(deciles, 50) == 50);
    CHECK(percentile({7}, 1) == 7);
    CHECK(percentile({7}, 100) == 7);
    CHECK_THROWS_AS(percentile({}, 50), ValidationError);
    CHECK_THROWS_AS(percentile({1}, 0), ValidationError);
    CHECK_THROWS_AS(percentile({1}, 101), ValidationError);
}

TEST_CASE("perf open loop sends at accumulated intervals") {
    TestbedConfig cfg = runner_config();
    Testbed tb(cfg, 1);
    PerfSpec spec;
    spec.device = "echo";
    spec.endpoint = "ping";
    spec.rate_per_s = 3;
    spec.duration_ms = 1000;
    PerfMetrics m = run_perf(tb, spec);
    CHECK(m.sent == 3);
    CHECK(m.sent == m.ok + m.error + m.timeout);
    CHECK(m.ok == 3);
    CHECK(m.latency_p50 == 20.0); // 10 ms each way

    PerfSpec bad = spec;
    bad.rate_per_s = 0;
    CHECK_THROWS_AS(run_perf(tb, bad), ValidationError);
    PerfSpec ghost = spec;
    ghost.device = "nope";
    CHECK_THROWS_AS(run_perf(tb, ghost), ValidationError);
}

TEST_CASE("perf over a dead path times out every request") {
    TestbedConfig cfg = runner_config();
    cfg.topology.links[0].loss_prob = 1.0;
    Testbed tb(cfg, 1);
    PerfSpec spec;
    spec.device = "echo";
    spec.endpoint = "ping";
    spec.rate_per_s = 10;
    spec.duration_ms = 1000;
    PerfMetrics m = run_perf(tb, spec);
    CHECK(m.sent == 10);
    CHECK(m.ok == 0);
    CHECK(m.timeout == 10);
}

TEST_CASE("replay reproduces a run and flags divergence") {
    TestbedConfig cfg = runner_config();
    std::string doc = [&] {
        Json d;
        d["configs"] = Json::array({cfg.to_json()});
        return d.dump(2) + "\n";
    }();
    TestbedConfig loaded = load_config(doc);
    Testbed tb(loaded, 42);
    TestSuite suite;
    suite.name = "replayable";
    suite.cases = {{"c", "", {await_temp(">", 20, 1000), ping()}}};
    run_suite(tb, suite);
    tb.log().finalize();
    std::string plog = tb.log().to_plog();

    ReplayReport ok = replay_run(plog, doc);
    CHECK(ok.identical);

    // corrupt one record's value
    std::string corrupted = plog;
    auto pos = corrupted.find("21.5");
    REQUIRE(pos != std::string::npos);
    corrupted.replace(pos, 4, "21.6");
    ReplayReport div = replay_run(corrupted, doc);
    CHECK_FALSE(div.identical);
    CHECK(div.first_divergence.has_value());

    std::string other_doc = doc;
    other_doc.replace(other_doc.find("\"runner\""), 8, "\"runnex\"");
    CHECK_THROWS_AS(replay_run(plog, other_doc), ValidationError);
}

} // TEST_SUITE
