#ifndef PATRIOT_NETSIM_HPP
#define PATRIOT_NETSIM_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "patriot/collector.hpp"
#include "patriot/rng.hpp"
#include "patriot/sim.hpp"

namespace patriot {

enum class NodeKind { Device, Router, Gateway, External };

struct NodeSpec {
    std::string name;
    NodeKind kind = NodeKind::Device;
};

struct LinkSpec {
    std::string a;
    std::string b;
    SimTime latency_ms = 0;
    double loss_prob = 0.0;
    std::optional<std::int64_t> bandwidth_bps;
    bool up = true;
};

struct TopologySpec {
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;

    /// Throws ValidationError on duplicate nodes, dangling endpoints,
    /// self-loops, or out-of-range link parameters.
    void validate() const;
};

/// A payload in flight across the virtual network. size_bytes defaults to
/// the payload length but may be overridden for perf modeling.
struct MessageEnvelope {
    std::string src;
    std::string dst;
    std::string payload;
    std::int64_t size_bytes = 0;
    SimTime sent_at = 0;
    Json meta; // in-sim metadata (correlation ids, decoded datapoints); not on the wire

    static MessageEnvelope make(std::string src, std::string dst, std::string payload,
                                SimTime sent_at);
};

struct NetworkEvent {
    std::string kind; // link-up|link-down|node-detach|node-attach|set-latency|set-loss
    std::string target_a; // node name, or link endpoint a
    std::string target_b; // link endpoint b (empty for node targets)
    std::optional<double> value;
};

struct DeliveryOutcome {
    bool delivered = false;
    SimTime delivered_at = 0;
    std::string drop_reason; // "unroutable" | "loss"
    std::int64_t message_id = -1;
};

/// Virtual network over the event loop: hop-count routing, per-hop loss
/// draws, additive latency, optional bandwidth serialization delay.
class Network {
public:
    using ReceiveHandler = std::function<void(const MessageEnvelope&)>;

    Network(SimLoop& loop, CollectorLog& log, RngStream rng, TopologySpec spec);

    /// Shortest path by hop count over up links. Ties resolve to the
    /// lexicographically smallest node-name sequence read from the
    /// lexicographically smaller endpoint, which keeps route(a,b) the
    /// reverse of route(b,a). Empty result = unroutable.
    std::vector<std::string> route(const std::string& src, const std::string& dst) const;

    /// Schedules delivery (or records a drop). One loss draw per hop in
    /// path order; delay is the sum of hop latencies plus bandwidth
    /// serialization where configured.
    DeliveryOutcome send(MessageEnvelope env);

    void apply_event(const NetworkEvent& ev);

    void set_receive_handler(const std::string& node, ReceiveHandler handler);

    bool has_node(const std::string& name) const { return node_index_.count(name) > 0; }
    bool node_attached(const std::string& name) const;

    std::int64_t sent() const { return sent_; }
    std::int64_t delivered() const { return delivered_; }
    std::int64_t dropped() const { return dropped_; }

    const TopologySpec& spec() const { return spec_; }
    std::vector<std::pair<std::string, bool>> link_states() const;

private:
    struct Link {
        std::size_t a, b;
        SimTime latency_ms;
        double loss_prob;
        std::optional<std::int64_t> bandwidth_bps;
        bool up;
    };

    std::size_t node_id(const std::string& name) const;
    Link* find_link(const std::string& a, const std::string& b);
    const Link* hop_link(std::size_t a, std::size_t b) const;

    SimLoop& loop_;
    CollectorLog& log_;
    RngStream rng_;
    TopologySpec spec_;
    std::map<std::string, std::size_t> node_index_;
    std::vector<std::string> node_names_;
    std::vector<bool> node_attached_;
    std::vector<Link> links_;
    std::vector<std::vector<std::size_t>> adjacency_; // node -> link ids
    std::map<std::string, ReceiveHandler> handlers_;
    std::int64_t next_message_id_ = 0;
    std::int64_t sent_ = 0;
    std::int64_t delivered_ = 0;
    std::int64_t dropped_ = 0;
};

} // namespace patriot

#endif
