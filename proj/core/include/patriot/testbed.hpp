#ifndef PATRIOT_TESTBED_HPP
#define PATRIOT_TESTBED_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "patriot/collector.hpp"
#include "patriot/device.hpp"
#include "patriot/netsim.hpp"
#include "patriot/rng.hpp"
#include "patriot/sim.hpp"

namespace patriot {

class TcpLineServer;
class TcpLineClient;

/// Stand-in slot for a physical device: loopback at desk scale, a real
/// socket when hardware exists.
struct AdapterSpec {
    std::string device_id;
    std::string kind; // loopback|external-tcp
    std::string host;
    int port = 0;

    static AdapterSpec from_json(const Json& j);
    Json to_json() const;
};

struct TestbedConfig {
    std::string name;
    std::optional<std::uint64_t> seed;
    TopologySpec topology;
    std::vector<ProviderSpec> providers;
    std::vector<ActuatorSpec> actuators;
    std::vector<AdapterSpec> adapters;
    std::string source_bytes; // raw document the config was loaded from

    void validate() const;
    static TestbedConfig from_json(const Json& j);
    Json to_json() const;
};

/// fnv1a64 over the raw config document bytes, hex lowercase.
std::string config_hash(const std::string& raw_bytes);

/// Parse a config document `{"configs":[...]}`. Throws ValidationError
/// with a field path on syntax/schema errors.
std::vector<TestbedConfig> load_configs(const std::string& document);

/// Select one config by name (empty = first).
TestbedConfig load_config(const std::string& document, const std::string& select = "");

struct HubAction {
    std::string kind; // network-event|reconfigure-provider|detach-device|attach-device
    NetworkEvent network_event;     // kind == network-event
    std::string device_id;          // device actions
    GeneratorSpec new_generator;    // reconfigure-provider

    static HubAction from_json(const Json& j);
    Json to_json() const;
};

struct TestbedState {
    SimTime sim_time = 0;
    std::map<std::string, std::string> actuator_states;
    std::map<std::string, std::int64_t> provider_sample_index;
    std::vector<std::pair<std::string, bool>> link_states;
    std::int64_t sent = 0;
    std::int64_t delivered = 0;
    std::int64_t dropped = 0;
};

/// A provisioned testbed: the event loop, virtual network, collector and
/// spawned devices. Construction either fully succeeds or leaves nothing
/// behind.
class Testbed {
public:
    Testbed(TestbedConfig config, std::uint64_t seed);
    ~Testbed();

    Testbed(const Testbed&) = delete;
    Testbed& operator=(const Testbed&) = delete;

    SimLoop& loop() { return loop_; }
    CollectorLog& log() { return log_; }
    Network& network() { return *network_; }
    const TestbedConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }

    void hub_dispatch(const HubAction& action);
    TestbedState monitor_snapshot() const;

    // --- runner-facing surface ---

    using DataPointHook = std::function<void(const DataPoint&)>;
    int add_datapoint_hook(DataPointHook hook);
    void remove_datapoint_hook(int id);

    /// Send a request to a simulated actuator. on_response fires on the
    /// loop when the response arrives; it never fires if the response is
    /// lost or unroutable (callers arm their own timeout). Returns false
    /// for an unknown device.
    bool invoke_actuator(const std::string& device_id, const ActuatorRequest& request,
                         std::function<void(const Json& response)> on_response);

    /// Current state of a simulated actuator, if it exists.
    std::optional<std::string> actuator_state(const std::string& device_id) const;

    bool has_device(const std::string& device_id) const;

    /// Raw bytes delivered to a node by in-sim provider connectors; kept
    /// for tests that assert on wire payloads.
    const std::vector<std::string>& sink_bytes(const std::string& node) const;

    /// Ingest any frames queued by external-tcp adapters, stamping them
    /// at the current sim time.
    void poll_external();

private:
    struct ProviderRt {
        ProviderSpec spec;
        GeneratorState gstate;
        std::int64_t k = 0;
        RngStream rng;
        std::unique_ptr<TcpLineClient> tcp;
    };
    struct ActuatorRt {
        ActuatorSpec spec;
        std::string state;
        std::map<std::string, Json> variables;
    };
    struct AdapterRt {
        AdapterSpec spec;
        std::unique_ptr<TcpLineServer> server;
    };

    void emit(ProviderRt& p);
    void schedule_emission(ProviderRt& p);
    void on_deliver(const MessageEnvelope& env);
    void handle_actuator_request(ActuatorRt& act, const MessageEnvelope& env);
    void fire_datapoint(const DataPoint& dp);
    void detach_attach_device(const std::string& device_id, bool attach);
    std::string device_node(const std::string& device_id) const;

    TestbedConfig config_;
    std::uint64_t seed_;
    SimLoop loop_;
    CollectorLog log_;
    std::unique_ptr<Network> network_;
    std::map<std::string, ProviderRt> providers_;
    std::map<std::string, ActuatorRt> actuators_;
    std::vector<AdapterRt> adapters_;
    std::map<int, DataPointHook> hooks_;
    int next_hook_id_ = 0;
    std::int64_t next_corr_ = 0;
    std::map<std::int64_t, std::function<void(const Json&)>> pending_;
    std::map<std::string, std::vector<std::string>> sink_bytes_;
};

} // namespace patriot

#endif
