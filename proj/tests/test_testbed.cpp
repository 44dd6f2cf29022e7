#include <doctest.h>

#include "patriot/demo.hpp"
#include "patriot/errors.hpp"
#include "patriot/testbed.hpp"
#include "support/reference.hpp"

using namespace patriot;

namespace {

TestbedConfig small_config() {
    TestbedConfig cfg;
    cfg.name = "small";
    cfg.topology.nodes = {{"sensor", NodeKind::Device}, {"sink", NodeKind::Gateway}};
    cfg.topology.links = {{"sensor", "sink", 15, 0.0, std::nullopt, true}};
    ProviderSpec p;
    p.device_id = "sensor";
    p.label = "temperature";
    p.generator.kind = GeneratorSpec::Kind::Constant;
    p.generator.value = 21.5;
    p.period_ms = 100;
    p.connector.kind = ConnectorSpec::Kind::InSim;
    p.connector.via_node = "sensor";
    p.connector.sink_node = "sink";
    cfg.providers = {p};
    return cfg;
}

std::string doc_for(const TestbedConfig& cfg) {
    Json doc;
    doc["configs"] = Json::array({cfg.to_json()});
    return doc.dump(2) + "\n";
}

int count_kind(const CollectorLog& log, const std::string& kind) {
    int n = 0;
    for (const auto& r : log.records())
        if (r.kind == kind) ++n;
    return n;
}

} // namespace

TEST_SUITE("testbed") {

TEST_CASE("config hash is fnv1a64 of the raw bytes, hex lowercase") {
    std::string bytes = "{\"configs\":[]}";
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016lx", ref::fnv1a64(bytes));
    CHECK(config_hash(bytes) == buf);
}

TEST_CASE("load_config parses, selects, and reports paths") {
    std::string doc = doc_for(small_config());
    TestbedConfig cfg = load_config(doc);
    CHECK(cfg.name == "small");
    CHECK(cfg.source_bytes == doc);
    CHECK(load_config(doc, "small").name == "small");
    CHECK_THROWS_AS(load_config(doc, "other"), ValidationError);
    CHECK_THROWS_AS(load_config(""), ValidationError);
    CHECK_THROWS_AS(load_config("{}"), ValidationError);
}

TEST_CASE("validation names dangling nodes and duplicate ids") {
    TestbedConfig bad = small_config();
    bad.providers[0].connector.sink_node = "gw9";
    try {
        bad.validate();
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("gw9") != std::string::npos);
    }

    TestbedConfig dup = small_config();
    dup.adapters.push_back({"sensor", "loopback", "", 0});
    CHECK_THROWS_AS(dup.validate(), ValidationError);
}

TEST_CASE("demo config documents load") {
    for (int id = 1; id <= 4; ++id) {
        TestbedConfig cfg = load_config(demo::builtin_config_document(id));
        CHECK_NOTHROW(cfg.validate());
    }
}

TEST_CASE("provision stamps seed and config hash into the header") {
    TestbedConfig cfg = small_config();
    cfg.source_bytes = doc_for(cfg);
    Testbed a(cfg, 1);
    Testbed b(cfg, 1);
    CHECK(a.log().seed() == 1);
    CHECK(a.log().config_hash() == config_hash(cfg.source_bytes));
    CHECK(a.log().config_hash() == b.log().config_hash());
}

TEST_CASE("provider emits every period starting at one period") {
    TestbedConfig cfg = small_config();
    Testbed tb(cfg, 1);
    tb.loop().run_until(1000);
    CHECK(count_kind(tb.log(), "data") == 10);
    for (const auto& r : tb.log().records()) {
        if (r.kind == "data") {
            CHECK(r.t % 100 == 0);
            CHECK(r.body["value"] == 21.5);
        }
    }
}

TEST_CASE("in-sim connector delivers the wire bytes to the sink") {
    TestbedConfig cfg = small_config();
    Testbed tb(cfg, 1);
    tb.loop().run_until(115);
    const auto& bytes = tb.sink_bytes("sink");
    REQUIRE(bytes.size() == 1);
    CHECK(bytes[0] ==
          "{\"device\":\"sensor\",\"label\":\"temperature\",\"t\":100,\"value\":21.5}\n");
    tb.loop().run_until(214);
    CHECK(tb.sink_bytes("sink").size() == 1); // second emission lands at 215
    tb.loop().run_until(215);
    CHECK(tb.sink_bytes("sink").size() == 2);
}

TEST_CASE("loopback provider records data without network traffic") {
    TestbedConfig cfg = small_config();
    cfg.providers[0].connector = ConnectorSpec{};
    Testbed tb(cfg, 1);
    tb.loop().run_until(500);
    CHECK(count_kind(tb.log(), "data") == 5);
    CHECK(count_kind(tb.log(), "message-sent") == 0);
}

TEST_CASE("hub reconfigure-provider swaps the generator and resets the index") {
    TestbedConfig cfg = small_config();
    Testbed tb(cfg, 1);
    tb.loop().run_until(300);
    HubAction act;
    act.kind = "reconfigure-provider";
    act.device_id = "sensor";
    act.new_generator.kind = GeneratorSpec::Kind::Constant;
    act.new_generator.value = 99;
    tb.hub_dispatch(act);
    tb.loop().run_until(400);
    const auto& recs = tb.log().records();
    double last = 0;
    for (const auto& r : recs)
        if (r.kind == "data") last = r.body["value"].get<double>();
    CHECK(last == 99.0);
    CHECK(tb.monitor_snapshot().provider_sample_index.at("sensor") == 1);
    CHECK(count_kind(tb.log(), "hub-action") == 1);
}

TEST_CASE("hub detach makes the provider's traffic unroutable") {
    TestbedConfig cfg = small_config();
    Testbed tb(cfg, 1);
    HubAction act;
    act.kind = "detach-device";
    act.device_id = "sensor";
    tb.hub_dispatch(act);
    tb.loop().run_until(300);
    CHECK(count_kind(tb.log(), "message-dropped") == 3);
    auto snap = tb.monitor_snapshot();
    CHECK(snap.dropped == 3);
    CHECK(snap.delivered == 0);

    HubAction back;
    back.kind = "attach-device";
    back.device_id = "sensor";
    tb.hub_dispatch(back);
    tb.loop().run_until(530); // emissions at 400 and 500 land at +15
    CHECK(tb.monitor_snapshot().delivered == 2);
}

TEST_CASE("hub rejects unknown targets") {
    TestbedConfig cfg = small_config();
    Testbed tb(cfg, 1);
    HubAction act;
    act.kind = "detach-device";
    act.device_id = "ghost";
    CHECK_THROWS_AS(tb.hub_dispatch(act), ValidationError);
}

TEST_CASE("fresh testbed snapshot is all zeroes") {
    TestbedConfig cfg = small_config();
    Testbed tb(cfg, 1);
    auto snap = tb.monitor_snapshot();
    CHECK(snap.sim_time == 0);
    CHECK(snap.sent == 0);
    CHECK(snap.delivered == 0);
    CHECK(snap.dropped == 0);
    CHECK(snap.provider_sample_index.at("sensor") == 0);
}

TEST_CASE("simulated actuator answers over the network") {
    TestbedConfig cfg = small_config();
    cfg.providers.clear();
    ActuatorSpec door = demo::garage_door_spec("door", ConnectorSpec{});
    door.connector.kind = ConnectorSpec::Kind::InSim;
    door.connector.via_node = "sensor";
    door.connector.sink_node = "sink";
    cfg.actuators = {door};
    Testbed tb(cfg, 1);

    Json response;
    bool ok = tb.invoke_actuator("door", {"open", {}},
                                 [&](const Json& r) { response = r; });
    CHECK(ok);
    tb.loop().run_until(100);
    CHECK(response["status"] == "ok");
    CHECK(tb.actuator_state("door") == "open");
    CHECK(tb.monitor_snapshot().actuator_states.at("door") == "open");
    // request and response each crossed the 15 ms link
    CHECK(tb.monitor_snapshot().delivered == 2);

    CHECK_FALSE(tb.invoke_actuator("ghost", {"open", {}}, [](const Json&) {}));
}

} // TEST_SUITE
