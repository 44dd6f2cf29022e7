#include "patriot/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "patriot/demo.hpp"
#include "patriot/errors.hpp"
#include "patriot/reporter.hpp"
#include "patriot/runner.hpp"
#include "patriot/testbed.hpp"

namespace patriot {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot read '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write '" + path + "'");
    }
    out << bytes;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag,
                           const std::optional<std::uint64_t>& from_config) {
    if (flag) return *flag;
    if (const char* env = std::getenv("PATRIOT_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ValidationError("PATRIOT_SEED must be an unsigned integer");
        }
    }
    if (from_config) return *from_config;
    return 0;
}

int verdict_exit_code(Verdict v) {
    switch (v) {
    case Verdict::Passed:
    case Verdict::PassedWithWarnings: return 0;
    case Verdict::Failed: return 1;
    case Verdict::Broken: return 2;
    }
    return 2;
}

/// Datatable references resolve relative to the suite file.
DatatableLoader loader_for(const std::string& suite_path) {
    std::filesystem::path base = std::filesystem::path(suite_path).parent_path();
    return [base](const std::string& ref) {
        return load_datatable(read_file((base / ref).string()));
    };
}

struct RunArgs {
    std::string config_path;
    std::string suite_path;
    std::string select;
    std::optional<std::uint64_t> seed;
    std::string report_json;
    std::string report_xml;
    std::string log_path;
};

int cmd_run(const RunArgs& args) {
    TestbedConfig config = load_config(read_file(args.config_path), args.select);
    Json suite_doc;
    try {
        suite_doc = Json::parse(read_file(args.suite_path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("suite '" + args.suite_path + "': " + e.what());
    }
    TestSuite suite = TestSuite::from_json(suite_doc);

    Testbed testbed(config, resolve_seed(args.seed, config.seed));
    SuiteResult result = run_suite(testbed, suite, loader_for(args.suite_path));
    testbed.log().finalize();

    if (!args.log_path.empty()) {
        write_file(args.log_path, testbed.log().to_plog());
    }
    if (!args.report_json.empty() || !args.report_xml.empty()) {
        ReportDocument report = build_report(result, testbed.log());
        if (!args.report_json.empty()) write_file(args.report_json, emit_json(report));
        if (!args.report_xml.empty()) write_file(args.report_xml, emit_junit_xml(report));
    }
    std::cout << "VERDICT " << to_string(result.verdict) << "\n";
    return verdict_exit_code(result.verdict);
}

int cmd_replay(const std::string& log_path, const std::string& config_path,
               const std::string& select) {
    ReplayReport report = replay_run(read_file(log_path), read_file(config_path), select);
    if (report.identical) {
        std::cout << "REPLAY identical\n";
        return 0;
    }
    std::cout << "REPLAY divergent at seq "
              << (report.first_divergence ? std::to_string(*report.first_divergence)
                                          : std::string("?"))
              << "\n";
    return 1;
}

struct PerfArgs {
    std::string config_path;
    std::string select;
    std::string target;
    double rate = 0.0;
    SimTime duration_ms = 0;
    std::optional<std::uint64_t> seed;
    std::string log_path;
};

int cmd_perf(const PerfArgs& args) {
    TestbedConfig config = load_config(read_file(args.config_path), args.select);
    auto dot = args.target.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == args.target.size()) {
        throw ValidationError("--target must be <device>.<endpoint>");
    }
    PerfSpec spec;
    spec.device = args.target.substr(0, dot);
    spec.endpoint = args.target.substr(dot + 1);
    spec.rate_per_s = args.rate;
    spec.duration_ms = args.duration_ms;

    Testbed testbed(config, resolve_seed(args.seed, config.seed));
    PerfMetrics metrics = run_perf(testbed, spec);
    testbed.log().finalize();
    if (!args.log_path.empty()) {
        write_file(args.log_path, testbed.log().to_plog());
    }
    std::cout << metrics.to_json().dump(2) << "\n";
    return 0;
}

int cmd_demo(int id) {
    std::cout << demo::builtin_config_document(id);
    return 0;
}

int cmd_list_configs(const std::string& config_path) {
    for (const auto& cfg : load_configs(read_file(config_path))) {
        std::cout << cfg.name << "\n";
    }
    return 0;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"deterministic IoT integration testbed"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "provision a testbed and run a suite");
    run->add_option("--config", run_args.config_path, "config document")->required();
    run->add_option("--suite", run_args.suite_path, "suite document")->required();
    run->add_option("--select", run_args.select, "config name within the document");
    run->add_option("--seed", run_args.seed, "seed override");
    run->add_option("--report-json", run_args.report_json, "write JSON report here");
    run->add_option("--report-xml", run_args.report_xml, "write JUnit XML report here");
    run->add_option("--log", run_args.log_path, "write the collector log here");

    std::string replay_log, replay_config, replay_select;
    CLI::App* replay = app.add_subcommand("replay", "re-execute a recorded run");
    replay->add_option("--log", replay_log, "recorded .plog")->required();
    replay->add_option("--config", replay_config, "config document")->required();
    replay->add_option("--select", replay_select, "config name within the document");

    PerfArgs perf_args;
    CLI::App* perf = app.add_subcommand("perf", "open-loop load against one endpoint");
    perf->add_option("--config", perf_args.config_path, "config document")->required();
    perf->add_option("--select", perf_args.select, "config name within the document");
    perf->add_option("--target", perf_args.target, "<device>.<endpoint>")->required();
    perf->add_option("--rate", perf_args.rate, "requests per second")->required();
    perf->add_option("--duration", perf_args.duration_ms, "duration in ms")->required();
    perf->add_option("--seed", perf_args.seed, "seed override");
    perf->add_option("--log", perf_args.log_path, "write the collector log here");

    int demo_id = 0;
    CLI::App* demo_cmd = app.add_subcommand("demo", "print a built-in config document");
    demo_cmd->add_option("--id", demo_id, "config id 1..4")->required();

    std::string list_path;
    CLI::App* list = app.add_subcommand("list-configs", "print config names in a document");
    list->add_option("--config", list_path, "config document")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (replay->parsed()) return cmd_replay(replay_log, replay_config, replay_select);
        if (perf->parsed()) return cmd_perf(perf_args);
        if (demo_cmd->parsed()) return cmd_demo(demo_id);
        if (list->parsed()) return cmd_list_configs(list_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

} // namespace patriot
