#include "patriot/reporter.hpp"

#include <cstdio>
#include <sstream>

#include "patriot/errors.hpp"

namespace patriot {

ReportDocument build_report(const SuiteResult& result, const CollectorLog& log) {
    if (!log.finalized()) {
        throw ValidationError("report: collector log must be finalized");
    }
    if (log.seed() != result.seed || log.config_hash() != result.config_hash) {
        throw ValidationError("report: suite result and log are from different runs");
    }
    ReportDocument doc;
    doc.suite = result.suite_name;
    doc.verdict = to_string(result.verdict);
    doc.seed = result.seed;
    doc.config_hash = result.config_hash;
    for (const auto& cr : result.cases) {
        ReportCase rc;
        rc.name = cr.name;
        rc.started_at = cr.started_at;
        rc.ended_at = cr.ended_at;
        std::vector<StepStatus> statuses;
        for (const auto& o : cr.outcomes) {
            rc.steps.push_back({to_string(o.status), o.detail, o.started_at, o.ended_at});
            statuses.push_back(o.status);
            switch (o.status) {
            case StepStatus::Passed: ++doc.counts.passed; break;
            case StepStatus::Warning: ++doc.counts.warnings; break;
            case StepStatus::Failed: ++doc.counts.failed; break;
            case StepStatus::Broken: ++doc.counts.broken; break;
            case StepStatus::Skipped: ++doc.counts.skipped; break;
            }
        }
        rc.verdict = to_string(aggregate_verdict(statuses));
        for (const auto& rec : log.records()) {
            if (rec.t >= cr.started_at && rec.t <= cr.ended_at) {
                rc.context.push_back(rec.seq);
            }
        }
        doc.cases.push_back(std::move(rc));
    }
    return doc;
}

std::string emit_json(const ReportDocument& report) {
    Json j;
    j["suite"] = report.suite;
    j["verdict"] = report.verdict;
    j["seed"] = report.seed;
    j["config_hash"] = report.config_hash;
    j["counts"] = Json{{"passed", report.counts.passed},
                       {"warnings", report.counts.warnings},
                       {"failed", report.counts.failed},
                       {"broken", report.counts.broken},
                       {"skipped", report.counts.skipped}};
    Json cases = Json::array();
    for (const auto& c : report.cases) {
        Json cj;
        cj["name"] = c.name;
        cj["verdict"] = c.verdict;
        cj["started_at"] = c.started_at;
        cj["ended_at"] = c.ended_at;
        Json steps = Json::array();
        for (const auto& s : c.steps) {
            steps.push_back(Json{{"status", s.status},
                                 {"detail", s.detail},
                                 {"started_at", s.started_at},
                                 {"ended_at", s.ended_at}});
        }
        cj["steps"] = steps;
        cj["context"] = c.context;
        cases.push_back(std::move(cj));
    }
    j["cases"] = cases;
    return j.dump(2) + "\n";
}

ReportDocument report_from_json(const std::string& bytes) {
    Json j;
    try {
        j = Json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("report: ") + e.what());
    }
    ReportDocument doc;
    doc.suite = j.at("suite").get<std::string>();
    doc.verdict = j.at("verdict").get<std::string>();
    doc.seed = j.at("seed").get<std::uint64_t>();
    doc.config_hash = j.at("config_hash").get<std::string>();
    const Json& counts = j.at("counts");
    doc.counts.passed = counts.at("passed").get<std::int64_t>();
    doc.counts.warnings = counts.at("warnings").get<std::int64_t>();
    doc.counts.failed = counts.at("failed").get<std::int64_t>();
    doc.counts.broken = counts.at("broken").get<std::int64_t>();
    doc.counts.skipped = counts.at("skipped").get<std::int64_t>();
    for (const auto& cj : j.at("cases")) {
        ReportCase c;
        c.name = cj.at("name").get<std::string>();
        c.verdict = cj.at("verdict").get<std::string>();
        c.started_at = cj.at("started_at").get<SimTime>();
        c.ended_at = cj.at("ended_at").get<SimTime>();
        for (const auto& sj : cj.at("steps")) {
            c.steps.push_back({sj.at("status").get<std::string>(),
                               sj.at("detail").get<std::string>(),
                               sj.at("started_at").get<SimTime>(),
                               sj.at("ended_at").get<SimTime>()});
        }
        for (const auto& seq : cj.at("context")) {
            c.context.push_back(seq.get<std::int64_t>());
        }
        doc.cases.push_back(std::move(c));
    }
    return doc;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string seconds(SimTime span_ms) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", static_cast<double>(span_ms) / 1000.0);
    return buf;
}

} // namespace

std::string emit_junit_xml(const ReportDocument& report) {
    std::int64_t failures = 0, errors = 0, skipped = 0;
    for (const auto& c : report.cases) {
        if (c.verdict == "Failed") ++failures;
        else if (c.verdict == "Broken") ++errors;
        bool all_skipped = !c.steps.empty();
        for (const auto& s : c.steps) {
            if (s.status != "Skipped") all_skipped = false;
        }
        if (all_skipped) ++skipped;
    }
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    SimTime span = 0;
    for (const auto& c : report.cases) span += c.ended_at - c.started_at;
    out << "<testsuite name=\"" << xml_escape(report.suite) << "\" tests=\""
        << report.cases.size() << "\" failures=\"" << failures << "\" errors=\""
        << errors << "\" skipped=\"" << skipped << "\" time=\"" << seconds(span)
        << "\">\n";
    for (const auto& c : report.cases) {
        out << "  <testcase name=\"" << xml_escape(c.name) << "\" time=\""
            << seconds(c.ended_at - c.started_at) << "\"";
        std::string first_detail;
        for (const auto& s : c.steps) {
            if (first_detail.empty() &&
                (s.status == "Failed" || s.status == "Broken") && !s.detail.empty()) {
                first_detail = s.detail;
            }
        }
        bool all_skipped = !c.steps.empty();
        for (const auto& s : c.steps) {
            if (s.status != "Skipped") all_skipped = false;
        }
        std::vector<std::string> warnings;
        for (const auto& s : c.steps) {
            if (s.status == "Warning") warnings.push_back(s.detail);
        }
        if (c.verdict == "Failed") {
            out << ">\n    <failure message=\"" << xml_escape(first_detail)
                << "\"/>\n  </testcase>\n";
        } else if (c.verdict == "Broken") {
            out << ">\n    <error message=\"" << xml_escape(first_detail)
                << "\"/>\n  </testcase>\n";
        } else if (all_skipped) {
            out << ">\n    <skipped/>\n  </testcase>\n";
        } else if (!warnings.empty()) {
            out << ">\n    <system-out>";
            for (const auto& w : warnings) out << "WARNING: " << xml_escape(w) << "\n";
            out << "</system-out>\n  </testcase>\n";
        } else {
            out << "/>\n";
        }
    }
    out << "</testsuite>\n";
    return out.str();
}

} // namespace patriot
