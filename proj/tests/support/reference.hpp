#ifndef TESTS_SUPPORT_REFERENCE_HPP
#define TESTS_SUPPORT_REFERENCE_HPP

// Independent reference implementations used as oracles. Kept separate
// from the library on purpose: tests compare the two.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <queue>
#include <string>
#include <vector>

namespace ref {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline double uniform(std::uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

inline double gaussian(std::uint64_t& state, double mean, double stddev) {
    double u1 = uniform(state);
    double u2 = uniform(state);
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
}

inline std::uint64_t derive(std::uint64_t global_seed, const std::string& name) {
    std::uint64_t s = fnv1a64(name) ^ global_seed;
    return splitmix64(s);
}

/// Plain BFS shortest path over an undirected adjacency list, ties broken
/// by expanding neighbors in lexicographic order from the lexicographically
/// smaller endpoint. Empty = unroutable.
inline std::vector<std::string> bfs_route(
    const std::map<std::string, std::vector<std::string>>& adj, std::string src,
    std::string dst) {
    bool flipped = dst < src;
    if (flipped) std::swap(src, dst);
    if (!adj.count(src) || !adj.count(dst)) return {};
    if (src == dst) return {src};
    // Lexicographically smallest shortest path: BFS distances from both
    // ends, then greedy smallest-neighbor descent along the corridor.
    std::map<std::string, int> dist;
    dist[src] = 0;
    std::deque<std::string> q2{src};
    while (!q2.empty()) {
        std::string n = q2.front();
        q2.pop_front();
        for (const auto& m : adj.at(n)) {
            if (!dist.count(m)) {
                dist[m] = dist[n] + 1;
                q2.push_back(m);
            }
        }
    }
    if (!dist.count(dst)) return {};
    std::map<std::string, int> back;
    back[dst] = 0;
    std::deque<std::string> q3{dst};
    while (!q3.empty()) {
        std::string n = q3.front();
        q3.pop_front();
        for (const auto& m : adj.at(n)) {
            if (!back.count(m)) {
                back[m] = back[n] + 1;
                q3.push_back(m);
            }
        }
    }
    int total = dist.at(dst);
    std::vector<std::string> best{src};
    std::string cur = src;
    for (int step = 1; step <= total; ++step) {
        std::vector<std::string> nbrs = adj.at(cur);
        std::sort(nbrs.begin(), nbrs.end());
        for (const auto& m : nbrs) {
            if (dist.count(m) && dist.at(m) == step && back.count(m) &&
                back.at(m) == total - step) {
                best.push_back(m);
                cur = m;
                break;
            }
        }
    }
    if (flipped) std::reverse(best.begin(), best.end());
    return best;
}

/// Brute-force interpreter of a guarded state machine, mirroring the
/// declared first-match semantics with none of the library's machinery.
struct FsmTransition {
    std::string from, endpoint, to;
    bool has_guard = false;
    std::string guard_field, guard_op;
    double guard_number = 0.0;
};

struct FsmResult {
    bool ok = false;
    std::string state;
};

inline FsmResult fsm_step(const std::vector<FsmTransition>& transitions,
                          const std::string& state, const std::string& endpoint,
                          const std::map<std::string, double>& fields) {
    for (const auto& t : transitions) {
        if (t.from != state || t.endpoint != endpoint) continue;
        if (t.has_guard) {
            auto it = fields.find(t.guard_field);
            if (it == fields.end()) continue;
            double v = it->second;
            bool pass = false;
            if (t.guard_op == "=") pass = v == t.guard_number;
            else if (t.guard_op == "!=") pass = v != t.guard_number;
            else if (t.guard_op == "<") pass = v < t.guard_number;
            else if (t.guard_op == ">") pass = v > t.guard_number;
            if (!pass) continue;
        }
        return {true, t.to};
    }
    return {false, state};
}

} // namespace ref

#endif
