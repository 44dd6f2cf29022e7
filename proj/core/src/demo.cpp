#include "patriot/demo.hpp"

#include "patriot/errors.hpp"

namespace patriot::demo {

namespace {

constexpr const char* kStreetServer = "street.server";

ConnectorSpec in_sim(const std::string& via, const std::string& sink = kStreetServer) {
    ConnectorSpec c;
    c.kind = ConnectorSpec::Kind::InSim;
    c.via_node = via;
    c.sink_node = sink;
    return c;
}

EndpointDecl endpoint(const std::string& name, std::vector<FieldDecl> fields = {}) {
    return EndpointDecl{name, std::move(fields)};
}

Transition transition(const std::string& from, const std::string& ep, const std::string& to,
                      std::map<std::string, std::string> response = {}) {
    Transition t;
    t.from = from;
    t.endpoint = ep;
    t.to = to;
    t.response = std::move(response);
    return t;
}

void add_status_loops(ActuatorSpec& spec) {
    for (const auto& s : spec.machine.states) {
        spec.machine.transitions.push_back(
            transition(s, "status", s, {{"state", "${state}"}}));
    }
}

/// Two-state switch actuator (lights, sound system, windows, ...).
ActuatorSpec switch_spec(const std::string& device_id, const ConnectorSpec& connector,
                         const std::string& off_state, const std::string& on_state,
                         const std::string& on_ep, const std::string& off_ep) {
    ActuatorSpec a;
    a.device_id = device_id;
    a.connector = connector;
    a.endpoints = {endpoint(on_ep), endpoint(off_ep), endpoint("status")};
    a.machine.states = {off_state, on_state};
    a.machine.initial = off_state;
    a.machine.transitions = {
        transition(off_state, on_ep, on_state, {{"state", "${state}"}}),
        transition(on_state, off_ep, off_state, {{"state", "${state}"}}),
    };
    add_status_loops(a);
    a.validate();
    return a;
}

} // namespace

ActuatorSpec garage_door_spec(const std::string& device_id, const ConnectorSpec& connector) {
    return switch_spec(device_id, connector, "closed", "open", "open", "close");
}

ActuatorSpec coffee_machine_spec(const std::string& device_id, const ConnectorSpec& connector) {
    ActuatorSpec a;
    a.device_id = device_id;
    a.connector = connector;
    a.endpoints = {endpoint("brew", {{"cups", "number"}}), endpoint("finish"),
                   endpoint("status")};
    a.machine.states = {"idle", "brewing"};
    a.machine.initial = "idle";
    Transition brew = transition("idle", "brew", "brewing", {{"cups", "${req.cups}"}});
    brew.guard = Guard{"cups", ">", Json(0)};
    a.machine.transitions = {brew, transition("brewing", "finish", "idle")};
    add_status_loops(a);
    a.validate();
    return a;
}

namespace {

ActuatorSpec heating_spec(const std::string& device_id, const ConnectorSpec& connector) {
    ActuatorSpec a;
    a.device_id = device_id;
    a.connector = connector;
    a.endpoints = {endpoint("set", {{"target", "number"}}), endpoint("status")};
    a.machine.states = {"off", "heating"};
    a.machine.initial = "off";
    Transition on = transition("off", "set", "heating", {{"target", "${req.target}"}});
    on.guard = Guard{"target", ">", Json(0)};
    Transition off = transition("heating", "set", "off");
    off.guard = Guard{"target", "=", Json(0)};
    a.machine.transitions = {on, off};
    add_status_loops(a);
    a.validate();
    return a;
}

ActuatorSpec street_server_spec(const ConnectorSpec& connector) {
    ActuatorSpec a;
    a.device_id = kStreetServer;
    a.connector = connector;
    a.endpoints = {endpoint("alert", {{"source", "string"}}), endpoint("reset"),
                   endpoint("status")};
    a.machine.states = {"ok", "alerted"};
    a.machine.initial = "ok";
    a.machine.transitions = {
        transition("ok", "alert", "alerted", {{"source", "${req.source}"}}),
        transition("alerted", "alert", "alerted", {{"source", "${req.source}"}}),
        transition("alerted", "reset", "ok"),
    };
    add_status_loops(a);
    a.validate();
    return a;
}

ProviderSpec provider(const std::string& device_id, const std::string& label,
                      GeneratorSpec gen, SimTime period_ms, TransformFormat fmt,
                      ConnectorSpec connector) {
    ProviderSpec p;
    p.device_id = device_id;
    p.label = label;
    p.generator = std::move(gen);
    p.period_ms = period_ms;
    p.transformer = fmt;
    p.connector = std::move(connector);
    return p;
}

GeneratorSpec constant(double v) {
    GeneratorSpec g;
    g.kind = GeneratorSpec::Kind::Constant;
    g.value = v;
    return g;
}

GeneratorSpec linear(double start, double slope) {
    GeneratorSpec g;
    g.kind = GeneratorSpec::Kind::Linear;
    g.start = start;
    g.slope_per_sample = slope;
    return g;
}

GeneratorSpec random_walk(double start, double stddev, double min, double max) {
    GeneratorSpec g;
    g.kind = GeneratorSpec::Kind::RandomWalk;
    g.start = start;
    g.step_stddev = stddev;
    g.min = min;
    g.max = max;
    return g;
}

GeneratorSpec sinusoid(double mean, double amplitude, std::int64_t period, double noise) {
    GeneratorSpec g;
    g.kind = GeneratorSpec::Kind::Sinusoid;
    g.mean = mean;
    g.amplitude = amplitude;
    g.period_samples = period;
    g.noise_stddev = noise;
    return g;
}

GeneratorSpec walk_trajectory() {
    GeneratorSpec g;
    g.kind = GeneratorSpec::Kind::Trajectory;
    g.waypoints = {{0, 50.075, 14.437}, {60000, 50.078, 14.441}, {120000, 50.081, 14.447}};
    return g;
}

/// Adapter-slot roster of a physical smart house.
void add_physical_house(TestbedConfig& cfg, const std::string& house, bool adapter_gateway) {
    const char* devices[] = {"central_heating", "air_conditioning", "lights",
                             "sound_system",    "garage_door",      "windows",
                             "room_temp",       "humidity",         "rfid"};
    for (const char* d : devices) {
        cfg.adapters.push_back({house + "." + d, "loopback", "", 0});
    }
    if (adapter_gateway) {
        // Ephemeral port: the slot listens for a real gateway to dial in.
        cfg.adapters.push_back({house + ".gw", "external-tcp", "127.0.0.1", 0});
        cfg.topology.nodes.push_back({house + ".gw", NodeKind::External});
    } else {
        cfg.topology.nodes.push_back({house + ".gw", NodeKind::Gateway});
    }
}

/// Fully simulated smart house: nine sensors covering every generator
/// family and transformer format, plus the full actuator roster.
void add_simulated_house(TestbedConfig& cfg, const std::string& house) {
    auto node = [&](const std::string& dev) {
        std::string n = house + "." + dev;
        cfg.topology.nodes.push_back({n, NodeKind::Device});
        cfg.topology.links.push_back({n, house + ".gw", 5, 0.0, std::nullopt, true});
        return n;
    };
    cfg.topology.nodes.push_back({house + ".gw", NodeKind::Gateway});
    cfg.topology.links.push_back({house + ".gw", kStreetServer, 10, 0.0, std::nullopt, true});

    // Sensor parameters are demo choices; periods in sim-ms.
    cfg.providers.push_back(provider(node("motion"), "motion",
                                     random_walk(0, 0.4, 0, 1), 500,
                                     TransformFormat::JsonLines, in_sim(house + ".motion")));
    cfg.providers.push_back(provider(node("light"), "light_level",
                                     sinusoid(500, 300, 1440, 10), 60000,
                                     TransformFormat::JsonLines, in_sim(house + ".light")));
    cfg.providers.push_back(provider(node("co"), "co", random_walk(5, 1, 0, 50), 1000,
                                     TransformFormat::JsonLines, in_sim(house + ".co")));
    cfg.providers.push_back(provider(node("co2"), "co2",
                                     random_walk(600, 25, 400, 2000), 1000,
                                     TransformFormat::JsonLines, in_sim(house + ".co2")));
    cfg.providers.push_back(provider(node("outside_temp"), "outside_temperature",
                                     sinusoid(15, 10, 1440, 0.5), 60000,
                                     TransformFormat::JsonLines,
                                     in_sim(house + ".outside_temp")));
    cfg.providers.push_back(provider(node("fire"), "fire_outbreak", constant(0), 500,
                                     TransformFormat::JsonLines, in_sim(house + ".fire")));
    cfg.providers.push_back(provider(node("room_temp"), "room_temperature",
                                     constant(21.5), 100, TransformFormat::Csv,
                                     in_sim(house + ".room_temp")));
    cfg.providers.push_back(provider(node("humidity"), "humidity", linear(45, 0.01), 1000,
                                     TransformFormat::Plain, in_sim(house + ".humidity")));
    cfg.providers.push_back(provider(node("rfid"), "position", walk_trajectory(), 5000,
                                     TransformFormat::JsonLines, in_sim(house + ".rfid")));

    cfg.actuators.push_back(heating_spec(house + ".central_heating",
                                         in_sim(node("central_heating"))));
    cfg.actuators.push_back(switch_spec(house + ".air_conditioning",
                                        in_sim(node("air_conditioning")), "off", "cooling",
                                        "on", "off"));
    cfg.actuators.push_back(switch_spec(house + ".lights", in_sim(node("lights")), "off",
                                        "on", "on", "off"));
    cfg.actuators.push_back(switch_spec(house + ".sound_system",
                                        in_sim(node("sound_system")), "off", "playing",
                                        "on", "off"));
    cfg.actuators.push_back(garage_door_spec(house + ".garage_door",
                                             in_sim(node("garage_door"))));
    cfg.actuators.push_back(switch_spec(house + ".windows", in_sim(node("windows")),
                                        "closed", "open", "open", "close"));
    cfg.actuators.push_back(switch_spec(house + ".curtains", in_sim(node("curtains")),
                                        "closed", "open", "open", "close"));
    cfg.actuators.push_back(switch_spec(house + ".house_gate", in_sim(node("house_gate")),
                                        "closed", "open", "open", "close"));
    cfg.actuators.push_back(coffee_machine_spec(house + ".coffee_machine",
                                                in_sim(node("coffee_machine"))));
}

void add_street_server(TestbedConfig& cfg) {
    cfg.topology.nodes.push_back({kStreetServer, NodeKind::Gateway});
    // The street server answers at its own node; requests originate at
    // the loopback point used by the runner.
    cfg.topology.nodes.push_back({"test.driver", NodeKind::External});
    cfg.topology.links.push_back({"test.driver", kStreetServer, 1, 0.0, std::nullopt, true});
    cfg.actuators.push_back(street_server_spec(in_sim(kStreetServer, "test.driver")));
}

TestbedConfig build_config(int id) {
    TestbedConfig cfg;
    switch (id) {
    case 1:
        cfg.name = "smart-street-1";
        add_physical_house(cfg, "houseA", /*adapter_gateway=*/true);
        break;
    case 2:
        cfg.name = "smart-street-2";
        add_physical_house(cfg, "houseA", /*adapter_gateway=*/false);
        break;
    case 3:
        cfg.name = "smart-street-3";
        add_street_server(cfg);
        add_physical_house(cfg, "houseA", /*adapter_gateway=*/true);
        add_simulated_house(cfg, "houseB");
        break;
    case 4:
        cfg.name = "smart-street-4";
        add_street_server(cfg);
        add_simulated_house(cfg, "houseA");
        add_simulated_house(cfg, "houseB");
        break;
    default:
        throw ValidationError("demo: config id must be in 1..4");
    }
    cfg.seed = 1;
    cfg.validate();
    return cfg;
}

TestStep invoke_step(const std::string& device, const std::string& ep,
                     std::map<std::string, Json> fields = {}) {
    TestStep s;
    s.kind = "invoke-actuator";
    s.device = device;
    s.endpoint = ep;
    s.fields = std::move(fields);
    return s;
}

TestStep await_step(const std::string& device, const std::string& label, SimTime timeout,
                    std::optional<Comparator> cmp = std::nullopt) {
    TestStep s;
    s.kind = "await-datapoint";
    s.device = device;
    s.label = label;
    s.timeout_ms = timeout;
    s.comparator = std::move(cmp);
    return s;
}

TestStep assert_step(const std::string& device, const std::string& expected) {
    TestStep s;
    s.kind = "assert-state";
    s.device = device;
    s.expected = expected;
    return s;
}

TestStep inject_step(HubAction action) {
    TestStep s;
    s.kind = "inject";
    s.action = std::move(action);
    return s;
}

TestSuite scenario_suite(const std::string& house) {
    TestSuite suite;
    suite.name = "scenario";

    TestCase fire;
    fire.name = "fire-outbreak-alert";
    HubAction trigger;
    trigger.kind = "reconfigure-provider";
    trigger.device_id = house + ".fire";
    trigger.new_generator = constant(1);
    fire.steps = {
        inject_step(trigger),
        await_step(house + ".fire", "fire_outbreak", 5000, Comparator{">", Json(0)}),
        invoke_step(kStreetServer, "alert", {{"source", Json(house + ".fire")}}),
        assert_step(kStreetServer, "alerted"),
        invoke_step(kStreetServer, "reset"),
        assert_step(kStreetServer, "ok"),
    };
    suite.cases.push_back(std::move(fire));

    TestCase door;
    door.name = "garage-door-cycle";
    door.steps = {
        invoke_step(house + ".garage_door", "open"),
        assert_step(house + ".garage_door", "open"),
        invoke_step(house + ".garage_door", "close"),
        assert_step(house + ".garage_door", "closed"),
    };
    suite.cases.push_back(std::move(door));

    TestCase temp;
    temp.name = "temperature-watch";
    TestStep warn;
    warn.kind = "warn-if";
    warn.cond_field = "value";
    warn.condition = Comparator{">", Json(28)};
    warn.detail = "room temperature above soft limit";
    temp.steps = {
        await_step(house + ".room_temp", "room_temperature", 2000,
                   Comparator{">", Json(20)}),
        warn,
    };
    suite.cases.push_back(std::move(temp));

    TestCase morning;
    morning.name = "morning-routine";
    TestStep par;
    par.kind = "parallel";
    TestStep sync;
    sync.kind = "sync-point";
    par.branches = {
        {invoke_step(house + ".lights", "on"), sync},
        {invoke_step(house + ".curtains", "open"), sync},
    };
    morning.steps = {
        par,
        assert_step(house + ".lights", "on"),
        assert_step(house + ".curtains", "open"),
    };
    suite.cases.push_back(std::move(morning));

    return suite;
}

TestSuite resilience_suite(const std::string& house) {
    TestSuite suite;
    suite.name = "resilience";
    TestCase c;
    c.name = "gateway-detach-recover";
    HubAction detach;
    detach.kind = "detach-device";
    detach.device_id = house + ".gw";
    HubAction attach;
    attach.kind = "attach-device";
    attach.device_id = house + ".gw";
    TestStep failing_await = await_step(house + ".co2", "co2", 3000);
    failing_await.critical = false; // the recovery half still runs
    c.steps = {
        inject_step(detach),
        failing_await,
        inject_step(attach),
        await_step(house + ".co2", "co2", 3000),
    };
    suite.cases.push_back(std::move(c));
    return suite;
}

} // namespace

TestbedConfig builtin_config(int id) {
    TestbedConfig cfg = build_config(id);
    cfg.source_bytes = builtin_config_document(id);
    return cfg;
}

std::string builtin_config_document(int id) {
    TestbedConfig cfg = build_config(id);
    Json doc;
    doc["configs"] = Json::array({cfg.to_json()});
    return doc.dump(2) + "\n";
}

TestSuite smoke_suite(const TestbedConfig& config) {
    TestSuite suite;
    suite.name = "smoke";
    for (const auto& p : config.providers) {
        TestCase c;
        c.name = "emits-" + p.device_id;
        c.steps = {await_step(p.device_id, p.label, 5 * p.period_ms + 1000)};
        suite.cases.push_back(std::move(c));
    }
    for (const auto& a : config.actuators) {
        TestCase c;
        c.name = "responds-" + a.device_id;
        c.steps = {invoke_step(a.device_id, "status")};
        suite.cases.push_back(std::move(c));
    }
    for (const auto& a : config.adapters) {
        TestCase c;
        c.name = "slot-" + a.device_id;
        TestStep sleep;
        sleep.kind = "sleep";
        sleep.ms = 100;
        c.steps = {sleep};
        suite.cases.push_back(std::move(c));
    }
    return suite;
}

std::vector<TestSuite> builtin_suites(int id) {
    TestbedConfig cfg = builtin_config(id);
    std::vector<TestSuite> suites;
    suites.push_back(smoke_suite(cfg));
    if (id >= 3) {
        suites.push_back(scenario_suite("houseB"));
        suites.push_back(resilience_suite("houseB"));
    }
    return suites;
}

} // namespace patriot::demo
