#include "patriot/testbed.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "patriot/errors.hpp"
#include "patriot/tcp.hpp"

namespace patriot {

// ---------------------------------------------------------------------------
// Config parsing

namespace {

NodeKind node_kind_from_string(const std::string& s) {
    if (s == "device") return NodeKind::Device;
    if (s == "router") return NodeKind::Router;
    if (s == "gateway") return NodeKind::Gateway;
    if (s == "external") return NodeKind::External;
    throw ValidationError("node kind '" + s + "' is not one of device|router|gateway|external");
}

std::string node_kind_to_string(NodeKind k) {
    switch (k) {
    case NodeKind::Device: return "device";
    case NodeKind::Router: return "router";
    case NodeKind::Gateway: return "gateway";
    case NodeKind::External: return "external";
    }
    return "device";
}

TopologySpec topology_from_json(const Json& j) {
    TopologySpec t;
    for (const auto& n : j.at("nodes")) {
        t.nodes.push_back({n.at("name").get<std::string>(),
                           node_kind_from_string(n.value("kind", std::string("device")))});
    }
    if (j.contains("links")) {
        for (const auto& l : j["links"]) {
            LinkSpec ls;
            ls.a = l.at("a").get<std::string>();
            ls.b = l.at("b").get<std::string>();
            ls.latency_ms = l.value("latency_ms", static_cast<SimTime>(0));
            ls.loss_prob = l.value("loss_prob", 0.0);
            if (l.contains("bandwidth_bps") && !l["bandwidth_bps"].is_null()) {
                ls.bandwidth_bps = l["bandwidth_bps"].get<std::int64_t>();
            }
            ls.up = l.value("up", true);
            t.links.push_back(std::move(ls));
        }
    }
    t.validate();
    return t;
}

Json topology_to_json(const TopologySpec& t) {
    Json j;
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
        nodes.push_back(Json{{"name", n.name}, {"kind", node_kind_to_string(n.kind)}});
    }
    j["nodes"] = nodes;
    Json links = Json::array();
    for (const auto& l : t.links) {
        Json lj;
        lj["a"] = l.a;
        lj["b"] = l.b;
        lj["latency_ms"] = l.latency_ms;
        lj["loss_prob"] = l.loss_prob;
        if (l.bandwidth_bps) lj["bandwidth_bps"] = *l.bandwidth_bps;
        lj["up"] = l.up;
        links.push_back(std::move(lj));
    }
    j["links"] = links;
    return j;
}

} // namespace

AdapterSpec AdapterSpec::from_json(const Json& j) {
    AdapterSpec a;
    a.device_id = j.at("device_id").get<std::string>();
    a.kind = j.at("kind").get<std::string>();
    if (a.kind == "external-tcp") {
        a.host = j.value("host", std::string("127.0.0.1"));
        a.port = j.at("port").get<int>();
    } else if (a.kind != "loopback") {
        throw ValidationError("adapter '" + a.device_id + "': kind must be loopback|external-tcp");
    }
    return a;
}

Json AdapterSpec::to_json() const {
    Json j;
    j["device_id"] = device_id;
    j["kind"] = kind;
    if (kind == "external-tcp") {
        j["host"] = host;
        j["port"] = port;
    }
    return j;
}

void TestbedConfig::validate() const {
    topology.validate();
    std::set<std::string> nodes;
    for (const auto& n : topology.nodes) nodes.insert(n.name);
    std::set<std::string> ids;
    auto check_id = [&](const std::string& id, const char* what) {
        if (id.empty()) throw ValidationError(std::string(what) + " with empty device_id");
        if (!ids.insert(id).second) {
            throw ValidationError("duplicate device_id '" + id + "'");
        }
    };
    auto check_connector = [&](const ConnectorSpec& c, const std::string& id) {
        if (c.kind == ConnectorSpec::Kind::InSim) {
            if (!nodes.count(c.via_node)) {
                throw ValidationError("device '" + id + "': connector.via_node '" +
                                      c.via_node + "' is not a topology node");
            }
            if (!nodes.count(c.sink_node)) {
                throw ValidationError("device '" + id + "': connector.sink_node '" +
                                      c.sink_node + "' is not a topology node");
            }
        }
    };
    for (const auto& p : providers) {
        check_id(p.device_id, "provider");
        check_connector(p.connector, p.device_id);
    }
    for (const auto& a : actuators) {
        check_id(a.device_id, "actuator");
        a.validate();
        check_connector(a.connector, a.device_id);
    }
    for (const auto& ad : adapters) check_id(ad.device_id, "adapter");
}

TestbedConfig TestbedConfig::from_json(const Json& j) {
    TestbedConfig c;
    c.name = j.at("name").get<std::string>();
    if (j.contains("seed") && !j["seed"].is_null()) {
        c.seed = j["seed"].get<std::uint64_t>();
    }
    try {
        c.topology = topology_from_json(j.at("topology"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config '" + c.name + "'.topology: " + e.what());
    }
    auto section = [&](const char* key, auto parse_one, auto& out) {
        if (!j.contains(key)) return;
        std::size_t i = 0;
        for (const auto& item : j[key]) {
            try {
                out.push_back(parse_one(item));
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError("config '" + c.name + "'." + key + "[" +
                                      std::to_string(i) + "]: " + e.what());
            }
            ++i;
        }
    };
    section("providers", [](const Json& x) { return ProviderSpec::from_json(x); }, c.providers);
    section("actuators", [](const Json& x) { return ActuatorSpec::from_json(x); }, c.actuators);
    section("adapters", [](const Json& x) { return AdapterSpec::from_json(x); }, c.adapters);
    c.validate();
    return c;
}

Json TestbedConfig::to_json() const {
    Json j;
    j["name"] = name;
    if (seed) j["seed"] = *seed;
    j["topology"] = topology_to_json(topology);
    Json ps = Json::array();
    for (const auto& p : providers) ps.push_back(p.to_json());
    j["providers"] = ps;
    Json as = Json::array();
    for (const auto& a : actuators) as.push_back(a.to_json());
    j["actuators"] = as;
    Json ads = Json::array();
    for (const auto& ad : adapters) ads.push_back(ad.to_json());
    j["adapters"] = ads;
    return j;
}

std::string config_hash(const std::string& raw_bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(raw_bytes)));
    return buf;
}

std::vector<TestbedConfig> load_configs(const std::string& document) {
    Json j;
    try {
        j = Json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config document: syntax error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("configs") || !j["configs"].is_array()) {
        throw ValidationError("config document: expected object with 'configs' array");
    }
    std::vector<TestbedConfig> out;
    std::size_t i = 0;
    for (const auto& cj : j["configs"]) {
        try {
            TestbedConfig c = TestbedConfig::from_json(cj);
            c.source_bytes = document;
            out.push_back(std::move(c));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("configs[" + std::to_string(i) + "]: " + e.what());
        }
        ++i;
    }
    return out;
}

TestbedConfig load_config(const std::string& document, const std::string& select) {
    auto configs = load_configs(document);
    if (configs.empty()) {
        throw ValidationError("config document: 'configs' array is empty");
    }
    if (select.empty()) return configs.front();
    for (auto& c : configs) {
        if (c.name == select) return c;
    }
    throw ValidationError("config document: no config named '" + select + "'");
}

HubAction HubAction::from_json(const Json& j) {
    HubAction a;
    a.kind = j.at("kind").get<std::string>();
    if (a.kind == "network-event") {
        const Json& e = j.at("event");
        a.network_event.kind = e.at("kind").get<std::string>();
        a.network_event.target_a = e.at("target").get<std::string>();
        a.network_event.target_b = e.value("target_b", std::string());
        if (e.contains("value") && !e["value"].is_null()) {
            a.network_event.value = e["value"].get<double>();
        }
    } else if (a.kind == "reconfigure-provider") {
        a.device_id = j.at("device_id").get<std::string>();
        a.new_generator = GeneratorSpec::from_json(j.at("generator"));
    } else if (a.kind == "detach-device" || a.kind == "attach-device") {
        a.device_id = j.at("device_id").get<std::string>();
    } else {
        throw ValidationError("hub action: unknown kind '" + a.kind + "'");
    }
    return a;
}

Json HubAction::to_json() const {
    Json j;
    j["kind"] = kind;
    if (kind == "network-event") {
        Json e;
        e["kind"] = network_event.kind;
        e["target"] = network_event.target_a;
        if (!network_event.target_b.empty()) e["target_b"] = network_event.target_b;
        if (network_event.value) e["value"] = *network_event.value;
        j["event"] = std::move(e);
    } else if (kind == "reconfigure-provider") {
        j["device_id"] = device_id;
        j["generator"] = new_generator.to_json();
    } else {
        j["device_id"] = device_id;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Testbed runtime

namespace {

Json sample_to_json(const SampleValue& v) {
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    const auto& ll = std::get<LatLon>(v);
    return Json::array({ll.lat, ll.lon});
}

} // namespace

Testbed::Testbed(TestbedConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      seed_(seed),
      log_(seed, config_hash(config_.source_bytes)) {
    config_.validate();
    network_ = std::make_unique<Network>(loop_, log_,
                                         RngStream::derived(seed_, "net"),
                                         config_.topology);
    for (const auto& n : config_.topology.nodes) {
        network_->set_receive_handler(n.name,
                                      [this](const MessageEnvelope& env) { on_deliver(env); });
    }
    for (const auto& spec : config_.actuators) {
        ActuatorRt rt;
        rt.spec = spec;
        rt.state = spec.machine.initial;
        rt.variables = spec.machine.variables;
        actuators_.emplace(spec.device_id, std::move(rt));
    }
    for (const auto& spec : config_.providers) {
        ProviderRt rt;
        rt.spec = spec;
        rt.rng = RngStream::derived(seed_, "provider." + spec.device_id);
        if (spec.connector.kind == ConnectorSpec::Kind::ExternalTcp) {
            rt.tcp = std::make_unique<TcpLineClient>(spec.connector.host,
                                                     spec.connector.port);
        }
        providers_.emplace(spec.device_id, std::move(rt));
    }
    for (const auto& spec : config_.adapters) {
        AdapterRt rt;
        rt.spec = spec;
        if (spec.kind == "external-tcp") {
            rt.server = std::make_unique<TcpLineServer>(spec.host, spec.port);
        }
        adapters_.push_back(std::move(rt));
    }
    // Emissions are scheduled in config order so run order is fixed.
    for (const auto& spec : config_.providers) {
        schedule_emission(providers_.at(spec.device_id));
    }
}

Testbed::~Testbed() = default;

void Testbed::schedule_emission(ProviderRt& p) {
    std::string id = p.spec.device_id;
    loop_.schedule(loop_.now() + p.spec.period_ms, [this, id] {
        auto it = providers_.find(id);
        if (it != providers_.end()) {
            emit(it->second);
            schedule_emission(it->second);
        }
    });
}

void Testbed::emit(ProviderRt& p) {
    DataPoint dp;
    dp.device = p.spec.device_id;
    dp.label = p.spec.label;
    dp.t = loop_.now();
    dp.value = next_sample(p.spec.generator, p.k, dp.t, p.gstate, p.rng);
    ++p.k;

    log_.record(dp.t, "data",
                Json{{"device", dp.device},
                     {"label", dp.label},
                     {"value", sample_to_json(dp.value)}});

    std::string bytes = transform(dp, p.spec.transformer);
    switch (p.spec.connector.kind) {
    case ConnectorSpec::Kind::Loopback:
        fire_datapoint(dp);
        break;
    case ConnectorSpec::Kind::ExternalTcp:
        if (p.tcp) p.tcp->send_line(bytes);
        fire_datapoint(dp);
        break;
    case ConnectorSpec::Kind::InSim: {
        MessageEnvelope env = MessageEnvelope::make(p.spec.connector.via_node,
                                                    p.spec.connector.sink_node,
                                                    std::move(bytes), dp.t);
        env.meta["datapoint"] = Json{{"device", dp.device},
                                     {"label", dp.label},
                                     {"t", dp.t},
                                     {"value", sample_to_json(dp.value)}};
        network_->send(std::move(env));
        break;
    }
    }
}

void Testbed::fire_datapoint(const DataPoint& dp) {
    // Hooks may unsubscribe while firing; iterate over a snapshot of ids.
    std::vector<int> ids;
    ids.reserve(hooks_.size());
    for (const auto& [id, _] : hooks_) ids.push_back(id);
    for (int id : ids) {
        auto it = hooks_.find(id);
        if (it == hooks_.end()) continue;
        DataPointHook hook = it->second; // may erase itself while running
        if (hook) hook(dp);
    }
}

void Testbed::on_deliver(const MessageEnvelope& env) {
    if (env.meta.contains("response_corr")) {
        auto corr = env.meta["response_corr"].get<std::int64_t>();
        auto it = pending_.find(corr);
        if (it != pending_.end()) {
            auto cb = std::move(it->second);
            pending_.erase(it);
            Json resp = env.meta.value("response", Json::object());
            if (cb) cb(resp);
        }
        return;
    }
    if (env.meta.contains("datapoint")) {
        sink_bytes_[env.dst].push_back(env.payload);
        const Json& d = env.meta["datapoint"];
        DataPoint dp;
        dp.device = d.at("device").get<std::string>();
        dp.label = d.at("label").get<std::string>();
        dp.t = d.at("t").get<SimTime>();
        if (d.at("value").is_array()) {
            dp.value = LatLon{d["value"][0].get<double>(), d["value"][1].get<double>()};
        } else {
            dp.value = d.at("value").get<double>();
        }
        fire_datapoint(dp);
        return;
    }
    // Otherwise: a request for whichever actuator is bound to this node.
    for (auto& [id, act] : actuators_) {
        if (act.spec.connector.kind == ConnectorSpec::Kind::InSim &&
            act.spec.connector.via_node == env.dst) {
            handle_actuator_request(act, env);
            return;
        }
    }
}

void Testbed::handle_actuator_request(ActuatorRt& act, const MessageEnvelope& env) {
    Json response;
    auto req = decode_request(env.payload);
    if (!req) {
        response = Json{{"status", "error"}, {"reason", "malformed"}, {"state", act.state}};
    } else {
        ActuatorResult result = actuator_handle(act.spec, act.state, act.variables, *req);
        act.state = result.new_state;
        response = std::move(result.response);
    }
    MessageEnvelope reply = MessageEnvelope::make(env.dst, env.src,
                                                  response.dump() + "\n", loop_.now());
    if (env.meta.contains("corr")) {
        reply.meta["response_corr"] = env.meta["corr"];
    }
    reply.meta["response"] = std::move(response);
    network_->send(std::move(reply));
}

int Testbed::add_datapoint_hook(DataPointHook hook) {
    int id = next_hook_id_++;
    hooks_[id] = std::move(hook);
    return id;
}

void Testbed::remove_datapoint_hook(int id) { hooks_.erase(id); }

bool Testbed::invoke_actuator(const std::string& device_id, const ActuatorRequest& request,
                              std::function<void(const Json& response)> on_response) {
    auto it = actuators_.find(device_id);
    if (it == actuators_.end()) return false;
    ActuatorRt& act = it->second;

    if (act.spec.connector.kind != ConnectorSpec::Kind::InSim) {
        // Loopback: handled directly, response on the next loop turn.
        log_.record(loop_.now(), "test-event",
                    Json{{"event", "actuator-request"},
                         {"device", device_id},
                         {"endpoint", request.endpoint}});
        ActuatorResult result = actuator_handle(act.spec, act.state, act.variables, request);
        act.state = result.new_state;
        log_.record(loop_.now(), "test-event",
                    Json{{"event", "actuator-response"},
                         {"device", device_id},
                         {"response", result.response}});
        loop_.schedule(loop_.now(), [cb = std::move(on_response),
                                     resp = std::move(result.response)] {
            if (cb) cb(resp);
        });
        return true;
    }

    std::int64_t corr = next_corr_++;
    pending_[corr] = std::move(on_response);
    MessageEnvelope env = MessageEnvelope::make(act.spec.connector.sink_node,
                                                act.spec.connector.via_node,
                                                encode_request(request), loop_.now());
    env.meta["corr"] = corr;
    network_->send(std::move(env));
    return true;
}

std::optional<std::string> Testbed::actuator_state(const std::string& device_id) const {
    auto it = actuators_.find(device_id);
    if (it == actuators_.end()) return std::nullopt;
    return it->second.state;
}

bool Testbed::has_device(const std::string& device_id) const {
    if (actuators_.count(device_id) || providers_.count(device_id)) return true;
    for (const auto& a : adapters_) {
        if (a.spec.device_id == device_id) return true;
    }
    return false;
}

const std::vector<std::string>& Testbed::sink_bytes(const std::string& node) const {
    static const std::vector<std::string> empty;
    auto it = sink_bytes_.find(node);
    return it == sink_bytes_.end() ? empty : it->second;
}

std::string Testbed::device_node(const std::string& device_id) const {
    auto pit = providers_.find(device_id);
    if (pit != providers_.end() &&
        pit->second.spec.connector.kind == ConnectorSpec::Kind::InSim) {
        return pit->second.spec.connector.via_node;
    }
    auto ait = actuators_.find(device_id);
    if (ait != actuators_.end() &&
        ait->second.spec.connector.kind == ConnectorSpec::Kind::InSim) {
        return ait->second.spec.connector.via_node;
    }
    if (network_->has_node(device_id)) return device_id;
    throw ValidationError("hub: unknown device or node '" + device_id + "'");
}

void Testbed::detach_attach_device(const std::string& device_id, bool attach) {
    NetworkEvent ev;
    ev.kind = attach ? "node-attach" : "node-detach";
    ev.target_a = device_node(device_id);
    network_->apply_event(ev);
}

void Testbed::hub_dispatch(const HubAction& action) {
    if (action.kind == "network-event") {
        network_->apply_event(action.network_event); // validates target first
    } else if (action.kind == "reconfigure-provider") {
        auto it = providers_.find(action.device_id);
        if (it == providers_.end()) {
            throw ValidationError("hub: unknown provider '" + action.device_id + "'");
        }
        it->second.spec.generator = action.new_generator;
        it->second.k = 0;
        it->second.gstate = GeneratorState{};
    } else if (action.kind == "detach-device") {
        detach_attach_device(action.device_id, false);
    } else if (action.kind == "attach-device") {
        detach_attach_device(action.device_id, true);
    } else {
        throw ValidationError("hub: unknown action kind '" + action.kind + "'");
    }
    log_.record(loop_.now(), "hub-action", action.to_json());
}

TestbedState Testbed::monitor_snapshot() const {
    TestbedState st;
    st.sim_time = loop_.now();
    for (const auto& [id, act] : actuators_) st.actuator_states[id] = act.state;
    for (const auto& [id, p] : providers_) st.provider_sample_index[id] = p.k;
    st.link_states = network_->link_states();
    st.sent = network_->sent();
    st.delivered = network_->delivered();
    st.dropped = network_->dropped();
    return st;
}

void Testbed::poll_external() {
    for (auto& a : adapters_) {
        if (!a.server) continue;
        for (auto& frame : a.server->drain()) {
            log_.record(loop_.now(), "data",
                        Json{{"device", a.spec.device_id},
                             {"label", "frame"},
                             {"text", frame}});
        }
    }
}

} // namespace patriot
