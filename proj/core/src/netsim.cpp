#include "patriot/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "patriot/errors.hpp"

namespace patriot {

void TopologySpec::validate() const {
    std::set<std::string> names;
    for (const auto& n : nodes) {
        if (n.name.empty()) {
            throw ValidationError("topology: node with empty name");
        }
        if (!names.insert(n.name).second) {
            throw ValidationError("topology: duplicate node '" + n.name + "'");
        }
    }
    for (const auto& l : links) {
        if (!names.count(l.a)) {
            throw ValidationError("topology: link endpoint '" + l.a + "' is not a node");
        }
        if (!names.count(l.b)) {
            throw ValidationError("topology: link endpoint '" + l.b + "' is not a node");
        }
        if (l.a == l.b) {
            throw ValidationError("topology: self-loop on '" + l.a + "'");
        }
        if (l.latency_ms < 0) {
            throw ValidationError("topology: negative latency on " + l.a + "-" + l.b);
        }
        if (l.loss_prob < 0.0 || l.loss_prob > 1.0) {
            throw ValidationError("topology: loss_prob out of [0,1] on " + l.a + "-" + l.b);
        }
        if (l.bandwidth_bps && *l.bandwidth_bps <= 0) {
            throw ValidationError("topology: bandwidth_bps must be > 0 on " + l.a + "-" + l.b);
        }
    }
}

MessageEnvelope MessageEnvelope::make(std::string src, std::string dst,
                                      std::string payload, SimTime sent_at) {
    MessageEnvelope env;
    env.src = std::move(src);
    env.dst = std::move(dst);
    env.size_bytes = static_cast<std::int64_t>(payload.size());
    env.payload = std::move(payload);
    env.sent_at = sent_at;
    return env;
}

Network::Network(SimLoop& loop, CollectorLog& log, RngStream rng, TopologySpec spec)
    : loop_(loop), log_(log), rng_(std::move(rng)), spec_(std::move(spec)) {
    spec_.validate();
    for (const auto& n : spec_.nodes) {
        node_index_[n.name] = node_names_.size();
        node_names_.push_back(n.name);
        node_attached_.push_back(true);
    }
    adjacency_.resize(node_names_.size());
    for (const auto& l : spec_.links) {
        Link link{node_index_[l.a], node_index_[l.b], l.latency_ms,
                  l.loss_prob, l.bandwidth_bps, l.up};
        adjacency_[link.a].push_back(links_.size());
        adjacency_[link.b].push_back(links_.size());
        links_.push_back(link);
    }
}

std::size_t Network::node_id(const std::string& name) const {
    auto it = node_index_.find(name);
    if (it == node_index_.end()) {
        throw ValidationError("network: unknown node '" + name + "'");
    }
    return it->second;
}

bool Network::node_attached(const std::string& name) const {
    return node_attached_[node_id(name)];
}

Network::Link* Network::find_link(const std::string& a, const std::string& b) {
    std::size_t ia = node_id(a), ib = node_id(b);
    for (auto li : adjacency_[ia]) {
        Link& l = links_[li];
        if ((l.a == ia && l.b == ib) || (l.a == ib && l.b == ia)) return &l;
    }
    return nullptr;
}

const Network::Link* Network::hop_link(std::size_t a, std::size_t b) const {
    for (auto li : adjacency_[a]) {
        const Link& l = links_[li];
        if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return &l;
    }
    return nullptr;
}

std::vector<std::string> Network::route(const std::string& src,
                                        const std::string& dst) const {
    std::size_t isrc = node_id(src), idst = node_id(dst);
    if (isrc == idst) return {src};

    // Canonical orientation: compute from the lexicographically smaller
    // endpoint so the tie-break yields symmetric routes.
    bool flipped = node_names_[isrc] > node_names_[idst];
    std::size_t from = flipped ? idst : isrc;
    std::size_t to = flipped ? isrc : idst;

    auto usable = [&](const Link& l) {
        return l.up && node_attached_[l.a] && node_attached_[l.b];
    };

    // BFS distances toward 'to'.
    std::vector<int> dist(node_names_.size(), -1);
    std::deque<std::size_t> q;
    dist[to] = 0;
    q.push_back(to);
    while (!q.empty()) {
        std::size_t cur = q.front();
        q.pop_front();
        for (auto li : adjacency_[cur]) {
            const Link& l = links_[li];
            if (!usable(l)) continue;
            std::size_t other = (l.a == cur) ? l.b : l.a;
            if (dist[other] < 0) {
                dist[other] = dist[cur] + 1;
                q.push_back(other);
            }
        }
    }
    if (dist[from] < 0 || !node_attached_[from] || !node_attached_[to]) return {};

    // Greedy descent: at each step take the smallest-named neighbor one
    // hop closer; this is the lexicographically smallest shortest path.
    std::vector<std::string> path;
    std::size_t cur = from;
    path.push_back(node_names_[cur]);
    while (cur != to) {
        std::size_t best = node_names_.size();
        for (auto li : adjacency_[cur]) {
            const Link& l = links_[li];
            if (!usable(l)) continue;
            std::size_t other = (l.a == cur) ? l.b : l.a;
            if (dist[other] != dist[cur] - 1) continue;
            if (best == node_names_.size() || node_names_[other] < node_names_[best]) {
                best = other;
            }
        }
        cur = best;
        path.push_back(node_names_[cur]);
    }
    if (flipped) std::reverse(path.begin(), path.end());
    return path;
}

DeliveryOutcome Network::send(MessageEnvelope env) {
    node_id(env.src);
    node_id(env.dst);
    std::int64_t id = next_message_id_++;
    ++sent_;
    log_.record(loop_.now(), "message-sent",
                Json{{"id", id},
                     {"src", env.src},
                     {"dst", env.dst},
                     {"size_bytes", env.size_bytes}});

    DeliveryOutcome outcome;
    outcome.message_id = id;

    auto path = route(env.src, env.dst);
    if (path.empty()) {
        ++dropped_;
        outcome.drop_reason = "unroutable";
        log_.record(loop_.now(), "message-dropped",
                    Json{{"id", id}, {"reason", "unroutable"}});
        return outcome;
    }

    SimTime delay = 0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const Link* l = hop_link(node_id(path[i]), node_id(path[i + 1]));
        double u = rng_.uniform();
        if (u < l->loss_prob) {
            ++dropped_;
            outcome.drop_reason = "loss";
            log_.record(loop_.now(), "message-dropped",
                        Json{{"id", id}, {"reason", "loss"}});
            return outcome;
        }
        delay += l->latency_ms;
        if (l->bandwidth_bps) {
            delay += static_cast<SimTime>(
                (env.size_bytes * 8000 + *l->bandwidth_bps - 1) / *l->bandwidth_bps);
        }
    }

    SimTime at = env.sent_at + delay;
    outcome.delivered = true;
    outcome.delivered_at = at;
    loop_.schedule(at, [this, id, env = std::move(env)]() {
        ++delivered_;
        log_.record(loop_.now(), "message-delivered", Json{{"id", id}});
        auto it = handlers_.find(env.dst);
        if (it != handlers_.end() && it->second) it->second(env);
    });
    return outcome;
}

void Network::apply_event(const NetworkEvent& ev) {
    Json body{{"kind", ev.kind}, {"target", ev.target_a}};
    if (!ev.target_b.empty()) body["target_b"] = ev.target_b;
    if (ev.value) body["value"] = *ev.value;

    if (ev.kind == "link-up" || ev.kind == "link-down" || ev.kind == "set-latency" ||
        ev.kind == "set-loss") {
        Link* l = find_link(ev.target_a, ev.target_b);
        if (!l) {
            throw ValidationError("network-event: no link " + ev.target_a + "-" +
                                  ev.target_b);
        }
        if (ev.kind == "link-up") {
            l->up = true;
        } else if (ev.kind == "link-down") {
            l->up = false;
        } else if (ev.kind == "set-latency") {
            if (!ev.value || *ev.value < 0) {
                throw ValidationError("network-event: set-latency needs value >= 0");
            }
            l->latency_ms = static_cast<SimTime>(*ev.value);
        } else {
            if (!ev.value || *ev.value < 0.0 || *ev.value > 1.0) {
                throw ValidationError("network-event: set-loss needs value in [0,1]");
            }
            l->loss_prob = *ev.value;
        }
    } else if (ev.kind == "node-detach" || ev.kind == "node-attach") {
        node_attached_[node_id(ev.target_a)] = (ev.kind == "node-attach");
    } else {
        throw ValidationError("network-event: unknown kind '" + ev.kind + "'");
    }
    log_.record(loop_.now(), "network-event", std::move(body));
}

void Network::set_receive_handler(const std::string& node, ReceiveHandler handler) {
    node_id(node);
    handlers_[node] = std::move(handler);
}

std::vector<std::pair<std::string, bool>> Network::link_states() const {
    std::vector<std::pair<std::string, bool>> out;
    for (const auto& l : links_) {
        out.emplace_back(node_names_[l.a] + "-" + node_names_[l.b], l.up);
    }
    return out;
}

} // namespace patriot
