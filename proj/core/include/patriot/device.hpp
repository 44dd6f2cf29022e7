#ifndef PATRIOT_DEVICE_HPP
#define PATRIOT_DEVICE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "patriot/collector.hpp"
#include "patriot/rng.hpp"
#include "patriot/sim.hpp"

namespace patriot {

// ---------------------------------------------------------------------------
// Data providers

struct Waypoint {
    SimTime t_ms;
    double lat;
    double lon;
};

struct GeneratorSpec {
    enum class Kind { Constant, Linear, RandomWalk, Sinusoid, Trajectory };
    Kind kind = Kind::Constant;
    double value = 0.0;          // constant
    double start = 0.0;          // linear, random_walk
    double slope_per_sample = 0.0;
    double step_stddev = 0.0;    // random_walk
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;           // sinusoid
    double amplitude = 0.0;
    std::int64_t period_samples = 1;
    double noise_stddev = 0.0;
    std::vector<Waypoint> waypoints; // trajectory, t strictly increasing

    void validate() const;
    static GeneratorSpec from_json(const Json& j);
    Json to_json() const;
};

struct LatLon {
    double lat;
    double lon;
    bool operator==(const LatLon&) const = default;
};

using SampleValue = std::variant<double, LatLon>;

struct DataPoint {
    std::string device;
    std::string label;
    SimTime t = 0;
    SampleValue value = 0.0;
};

/// Mutable per-provider sampling state (random walk position).
struct GeneratorState {
    double walk_value = 0.0;
    bool walk_init = false;
};

/// Sample k of a generator at emission time t.
SampleValue next_sample(const GeneratorSpec& spec, std::int64_t k, SimTime t,
                        GeneratorState& state, RngStream& stream);

enum class TransformFormat { JsonLines, Csv, Plain };

TransformFormat transform_format_from_string(const std::string& s);
std::string to_string(TransformFormat f);

/// Deterministic number rendering shared by all wire formats: integral
/// values print without a decimal point, others as fixed 9 decimals with
/// trailing zeros (then a trailing dot) trimmed.
std::string render_number(double v);

/// Serialize a DataPoint to its wire format (single line, newline
/// terminated, fixed key order for json-lines).
std::string transform(const DataPoint& dp, TransformFormat format);

/// Inverse of transform for json-lines and csv (plain has no device field).
DataPoint parse_datapoint(const std::string& bytes, TransformFormat format);

// ---------------------------------------------------------------------------
// Actuators

struct FieldDecl {
    std::string name;
    std::string type; // number|string|bool
};

struct EndpointDecl {
    std::string name;
    std::vector<FieldDecl> request_fields;
};

struct Guard {
    std::string field;
    std::string op; // = != < >
    Json literal;
};

struct Transition {
    std::string from;
    std::string endpoint;
    std::optional<Guard> guard;
    std::string to;
    std::map<std::string, std::string> response; // template map
};

struct StateMachineSpec {
    std::vector<std::string> states;
    std::string initial;
    std::map<std::string, Json> variables;
    std::vector<Transition> transitions;

    static StateMachineSpec from_json(const Json& j);
    Json to_json() const;
};

struct ConnectorSpec {
    enum class Kind { InSim, ExternalTcp, Loopback };
    Kind kind = Kind::Loopback;
    std::string sink_node; // in-sim
    std::string via_node;  // in-sim
    std::string host;      // external-tcp
    int port = 0;          // external-tcp

    static ConnectorSpec from_json(const Json& j);
    Json to_json() const;
};

struct ProviderSpec {
    std::string device_id;
    std::string label;
    GeneratorSpec generator;
    SimTime period_ms = 1000;
    TransformFormat transformer = TransformFormat::JsonLines;
    ConnectorSpec connector;

    static ProviderSpec from_json(const Json& j);
    Json to_json() const;
};

struct ActuatorSpec {
    std::string device_id;
    std::vector<EndpointDecl> endpoints;
    StateMachineSpec machine;
    ConnectorSpec connector;

    void validate() const;
    static ActuatorSpec from_json(const Json& j);
    Json to_json() const;

    const EndpointDecl* find_endpoint(const std::string& name) const;
};

struct ActuatorRequest {
    std::string endpoint;
    std::map<std::string, Json> fields;
};

struct ActuatorResult {
    Json response;          // {"status":..,["reason":..,]"state":..,"data":{..}}
    std::string new_state;  // unchanged on error / no-transition
};

/// Pure single-step interpretation of the state machine: transitions are
/// scanned in declaration order from the current state; the first one
/// whose endpoint matches and whose guard passes fires.
ActuatorResult actuator_handle(const ActuatorSpec& spec, const std::string& current_state,
                               const std::map<std::string, Json>& variables,
                               const ActuatorRequest& request);

/// Wire helpers: requests and responses are single-line JSON.
std::string encode_request(const ActuatorRequest& req);
std::optional<ActuatorRequest> decode_request(const std::string& line);

} // namespace patriot

#endif
