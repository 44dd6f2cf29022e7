#include "patriot/collector.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

#include "patriot/errors.hpp"

namespace patriot {

namespace {

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

CollectorLog::CollectorLog(std::uint64_t seed, const std::string& config_hash)
    : seed_(seed), config_hash_(config_hash), created_wall_(now_iso8601()) {}

std::int64_t CollectorLog::record(SimTime t, const std::string& kind, Json body) {
    if (finalized_) {
        throw ValidationError("collector: record after finalize");
    }
    CollectorRecord rec;
    rec.seq = static_cast<std::int64_t>(records_.size());
    rec.t = t;
    rec.kind = kind;
    rec.body = std::move(body);
    records_.push_back(std::move(rec));
    return records_.back().seq;
}

std::string CollectorLog::to_plog() const {
    std::ostringstream out;
    Json header;
    header["version"] = 1;
    header["seed"] = seed_;
    header["config_hash"] = config_hash_;
    header["created_wall"] = created_wall_;
    out << header.dump() << '\n';
    for (const auto& rec : records_) {
        Json line;
        line["seq"] = rec.seq;
        line["t"] = rec.t;
        line["kind"] = rec.kind;
        line["body"] = rec.body;
        out << line.dump() << '\n';
    }
    return out.str();
}

CollectorLog CollectorLog::from_plog(const std::string& bytes) {
    std::istringstream in(bytes);
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("plog: empty document");
    }
    Json header;
    try {
        header = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("plog: bad header: ") + e.what());
    }
    if (!header.contains("version") || header["version"] != 1) {
        throw ValidationError("plog: unsupported version");
    }
    CollectorLog log;
    log.seed_ = header.value("seed", 0ULL);
    log.config_hash_ = header.value("config_hash", std::string());
    log.created_wall_ = header.value("created_wall", std::string());
    std::int64_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("plog: bad record at line " + std::to_string(lineno) +
                                  ": " + e.what());
        }
        CollectorRecord rec;
        rec.seq = j.value("seq", static_cast<std::int64_t>(-1));
        rec.t = j.value("t", static_cast<SimTime>(0));
        rec.kind = j.value("kind", std::string());
        rec.body = j.value("body", Json::object());
        log.records_.push_back(std::move(rec));
    }
    log.finalized_ = true;
    return log;
}

std::vector<LogDivergence> diff_logs(const CollectorLog& a, const CollectorLog& b) {
    std::vector<LogDivergence> out;
    if (a.seed() != b.seed()) {
        out.push_back({-1, "seed", std::to_string(a.seed()), std::to_string(b.seed())});
    }
    if (a.config_hash() != b.config_hash()) {
        out.push_back({-1, "config_hash", a.config_hash(), b.config_hash()});
    }
    std::size_t n = std::min(a.records().size(), b.records().size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& ra = a.records()[i];
        const auto& rb = b.records()[i];
        if (ra.seq != rb.seq) {
            out.push_back({ra.seq, "seq", std::to_string(ra.seq), std::to_string(rb.seq)});
        }
        if (ra.t != rb.t) {
            out.push_back({ra.seq, "t", std::to_string(ra.t), std::to_string(rb.t)});
        }
        if (ra.kind != rb.kind) {
            out.push_back({ra.seq, "kind", ra.kind, rb.kind});
        }
        if (ra.body != rb.body) {
            out.push_back({ra.seq, "body", ra.body.dump(), rb.body.dump()});
        }
    }
    if (a.records().size() != b.records().size()) {
        out.push_back({static_cast<std::int64_t>(n), "length",
                       std::to_string(a.records().size()),
                       std::to_string(b.records().size())});
    }
    return out;
}

} // namespace patriot
