#ifndef PATRIOT_COLLECTOR_HPP
#define PATRIOT_COLLECTOR_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "patriot/sim.hpp"

namespace patriot {

using Json = nlohmann::ordered_json;

/// One logged event. body is kind-specific.
struct CollectorRecord {
    std::int64_t seq = 0;
    SimTime t = 0;
    std::string kind; // data|message-sent|message-delivered|message-dropped|network-event|hub-action|test-event
    Json body;
};

/// Where two logs disagree.
struct LogDivergence {
    std::int64_t seq = 0; // -1 for header fields
    std::string field;
    std::string value_a;
    std::string value_b;
};

/// Append-only, seed-stamped event log. One JSON object per line, header
/// first; created_wall is the only wall-clock field and is informational.
class CollectorLog {
public:
    CollectorLog() = default;
    CollectorLog(std::uint64_t seed, const std::string& config_hash);

    std::uint64_t seed() const { return seed_; }
    const std::string& config_hash() const { return config_hash_; }
    const std::string& created_wall() const { return created_wall_; }
    const std::vector<CollectorRecord>& records() const { return records_; }
    bool finalized() const { return finalized_; }

    /// Append a record; assigns the next dense seq and returns it.
    std::int64_t record(SimTime t, const std::string& kind, Json body);

    void finalize() { finalized_ = true; }

    /// Serialize as JSON-lines (.plog).
    std::string to_plog() const;

    /// Parse a .plog document. Throws ValidationError on malformed input
    /// or unsupported version.
    static CollectorLog from_plog(const std::string& bytes);

private:
    std::uint64_t seed_ = 0;
    std::string config_hash_;
    std::string created_wall_;
    std::vector<CollectorRecord> records_;
    bool finalized_ = false;
};

/// Field-wise structural comparison ignoring created_wall. Empty result
/// iff the logs are identical.
std::vector<LogDivergence> diff_logs(const CollectorLog& a, const CollectorLog& b);

} // namespace patriot

#endif
