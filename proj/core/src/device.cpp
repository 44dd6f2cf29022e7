#include "patriot/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "patriot/errors.hpp"

namespace patriot {

// ---------------------------------------------------------------------------
// GeneratorSpec

void GeneratorSpec::validate() const {
    switch (kind) {
    case Kind::RandomWalk:
        if (!(min <= start && start <= max)) {
            throw ValidationError("random_walk: requires min <= start <= max");
        }
        if (step_stddev < 0) {
            throw ValidationError("random_walk: step_stddev must be >= 0");
        }
        break;
    case Kind::Sinusoid:
        if (period_samples < 1) {
            throw ValidationError("sinusoid: period_samples must be >= 1");
        }
        if (noise_stddev < 0) {
            throw ValidationError("sinusoid: noise_stddev must be >= 0");
        }
        break;
    case Kind::Trajectory: {
        if (waypoints.empty()) {
            throw ValidationError("trajectory: needs at least one waypoint");
        }
        for (std::size_t i = 1; i < waypoints.size(); ++i) {
            if (waypoints[i].t_ms <= waypoints[i - 1].t_ms) {
                throw ValidationError("trajectory: waypoint times must strictly increase");
            }
        }
        break;
    }
    default:
        break;
    }
}

GeneratorSpec GeneratorSpec::from_json(const Json& j) {
    GeneratorSpec g;
    std::string kind = j.value("kind", std::string());
    if (kind == "constant") {
        g.kind = Kind::Constant;
        g.value = j.at("value").get<double>();
    } else if (kind == "linear") {
        g.kind = Kind::Linear;
        g.start = j.at("start").get<double>();
        g.slope_per_sample = j.at("slope_per_sample").get<double>();
    } else if (kind == "random_walk") {
        g.kind = Kind::RandomWalk;
        g.start = j.at("start").get<double>();
        g.step_stddev = j.at("step_stddev").get<double>();
        g.min = j.at("min").get<double>();
        g.max = j.at("max").get<double>();
    } else if (kind == "sinusoid") {
        g.kind = Kind::Sinusoid;
        g.mean = j.at("mean").get<double>();
        g.amplitude = j.at("amplitude").get<double>();
        g.period_samples = j.at("period_samples").get<std::int64_t>();
        g.noise_stddev = j.value("noise_stddev", 0.0);
    } else if (kind == "trajectory") {
        g.kind = Kind::Trajectory;
        for (const auto& w : j.at("waypoints")) {
            g.waypoints.push_back({w.at(0).get<SimTime>(), w.at(1).get<double>(),
                                   w.at(2).get<double>()});
        }
    } else {
        throw ValidationError("generator: unknown kind '" + kind + "'");
    }
    g.validate();
    return g;
}

Json GeneratorSpec::to_json() const {
    Json j;
    switch (kind) {
    case Kind::Constant:
        j["kind"] = "constant";
        j["value"] = value;
        break;
    case Kind::Linear:
        j["kind"] = "linear";
        j["start"] = start;
        j["slope_per_sample"] = slope_per_sample;
        break;
    case Kind::RandomWalk:
        j["kind"] = "random_walk";
        j["start"] = start;
        j["step_stddev"] = step_stddev;
        j["min"] = min;
        j["max"] = max;
        break;
    case Kind::Sinusoid:
        j["kind"] = "sinusoid";
        j["mean"] = mean;
        j["amplitude"] = amplitude;
        j["period_samples"] = period_samples;
        j["noise_stddev"] = noise_stddev;
        break;
    case Kind::Trajectory: {
        j["kind"] = "trajectory";
        Json wps = Json::array();
        for (const auto& w : waypoints) wps.push_back(Json::array({w.t_ms, w.lat, w.lon}));
        j["waypoints"] = wps;
        break;
    }
    }
    return j;
}

SampleValue next_sample(const GeneratorSpec& spec, std::int64_t k, SimTime t,
                        GeneratorState& state, RngStream& stream) {
    switch (spec.kind) {
    case GeneratorSpec::Kind::Constant:
        return spec.value;
    case GeneratorSpec::Kind::Linear:
        return spec.start + spec.slope_per_sample * static_cast<double>(k);
    case GeneratorSpec::Kind::RandomWalk: {
        if (!state.walk_init || k == 0) {
            state.walk_value = spec.start;
            state.walk_init = true;
            if (k == 0) return state.walk_value;
        }
        double step = stream.gaussian(0.0, spec.step_stddev);
        state.walk_value = std::clamp(state.walk_value + step, spec.min, spec.max);
        return state.walk_value;
    }
    case GeneratorSpec::Kind::Sinusoid: {
        double phase = 2.0 * std::numbers::pi * static_cast<double>(k) /
                       static_cast<double>(spec.period_samples);
        double noise = stream.gaussian(0.0, spec.noise_stddev);
        return spec.mean + spec.amplitude * std::sin(phase) + noise;
    }
    case GeneratorSpec::Kind::Trajectory: {
        const auto& wps = spec.waypoints;
        if (t <= wps.front().t_ms) return LatLon{wps.front().lat, wps.front().lon};
        if (t >= wps.back().t_ms) return LatLon{wps.back().lat, wps.back().lon};
        for (std::size_t i = 1; i < wps.size(); ++i) {
            if (t <= wps[i].t_ms) {
                const auto& a = wps[i - 1];
                const auto& b = wps[i];
                double f = static_cast<double>(t - a.t_ms) /
                           static_cast<double>(b.t_ms - a.t_ms);
                return LatLon{a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)};
            }
        }
        return LatLon{wps.back().lat, wps.back().lon};
    }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Transforms

TransformFormat transform_format_from_string(const std::string& s) {
    if (s == "json-lines") return TransformFormat::JsonLines;
    if (s == "csv") return TransformFormat::Csv;
    if (s == "plain") return TransformFormat::Plain;
    throw ValidationError("transformer: unknown format '" + s + "'");
}

std::string to_string(TransformFormat f) {
    switch (f) {
    case TransformFormat::JsonLines: return "json-lines";
    case TransformFormat::Csv: return "csv";
    case TransformFormat::Plain: return "plain";
    }
    return "";
}

std::string render_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) {
        return std::to_string(static_cast<std::int64_t>(v));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", v);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

namespace {

std::string render_value(const SampleValue& v, TransformFormat f) {
    if (std::holds_alternative<double>(v)) {
        return render_number(std::get<double>(v));
    }
    const auto& ll = std::get<LatLon>(v);
    if (f == TransformFormat::JsonLines) {
        return "[" + render_number(ll.lat) + "," + render_number(ll.lon) + "]";
    }
    return render_number(ll.lat) + ";" + render_number(ll.lon);
}

std::string json_escape(const std::string& s) {
    return Json(s).dump();
}

} // namespace

std::string transform(const DataPoint& dp, TransformFormat format) {
    switch (format) {
    case TransformFormat::JsonLines:
        return "{\"device\":" + json_escape(dp.device) +
               ",\"label\":" + json_escape(dp.label) +
               ",\"t\":" + std::to_string(dp.t) +
               ",\"value\":" + render_value(dp.value, format) + "}\n";
    case TransformFormat::Csv:
        return dp.device + "," + dp.label + "," + std::to_string(dp.t) + "," +
               render_value(dp.value, format) + "\n";
    case TransformFormat::Plain:
        return dp.label + "=" + render_value(dp.value, format) + "@" +
               std::to_string(dp.t) + "\n";
    }
    return "";
}

namespace {

SampleValue parse_value_text(const std::string& text) {
    auto semi = text.find(';');
    if (semi != std::string::npos) {
        return LatLon{std::stod(text.substr(0, semi)), std::stod(text.substr(semi + 1))};
    }
    return std::stod(text);
}

} // namespace

DataPoint parse_datapoint(const std::string& bytes, TransformFormat format) {
    DataPoint dp;
    if (format == TransformFormat::JsonLines) {
        Json j;
        try {
            j = Json::parse(bytes);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("parse_datapoint: ") + e.what());
        }
        dp.device = j.at("device").get<std::string>();
        dp.label = j.at("label").get<std::string>();
        dp.t = j.at("t").get<SimTime>();
        if (j.at("value").is_array()) {
            dp.value = LatLon{j["value"].at(0).get<double>(), j["value"].at(1).get<double>()};
        } else {
            dp.value = j.at("value").get<double>();
        }
        return dp;
    }
    if (format == TransformFormat::Csv) {
        std::string line = bytes;
        if (!line.empty() && line.back() == '\n') line.pop_back();
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (cells.size() < 3) {
            auto comma = line.find(',', pos);
            if (comma == std::string::npos) {
                throw ValidationError("parse_datapoint: csv needs 4 cells");
            }
            cells.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        cells.push_back(line.substr(pos));
        dp.device = cells[0];
        dp.label = cells[1];
        dp.t = std::stoll(cells[2]);
        dp.value = parse_value_text(cells[3]);
        return dp;
    }
    throw ValidationError("parse_datapoint: plain format is not parseable (no device field)");
}

// ---------------------------------------------------------------------------
// State machine

StateMachineSpec StateMachineSpec::from_json(const Json& j) {
    StateMachineSpec m;
    for (const auto& s : j.at("states")) m.states.push_back(s.get<std::string>());
    m.initial = j.at("initial").get<std::string>();
    if (j.contains("variables")) {
        for (auto it = j["variables"].begin(); it != j["variables"].end(); ++it) {
            m.variables[it.key()] = it.value();
        }
    }
    for (const auto& t : j.at("transitions")) {
        Transition tr;
        tr.from = t.at("from").get<std::string>();
        tr.endpoint = t.at("endpoint").get<std::string>();
        tr.to = t.at("to").get<std::string>();
        if (t.contains("guard") && !t["guard"].is_null()) {
            Guard g;
            g.field = t["guard"].at("field").get<std::string>();
            g.op = t["guard"].at("op").get<std::string>();
            g.literal = t["guard"].at("literal");
            tr.guard = g;
        }
        if (t.contains("response")) {
            for (auto it = t["response"].begin(); it != t["response"].end(); ++it) {
                tr.response[it.key()] = it.value().get<std::string>();
            }
        }
        m.transitions.push_back(std::move(tr));
    }
    return m;
}

Json StateMachineSpec::to_json() const {
    Json j;
    j["states"] = states;
    j["initial"] = initial;
    Json vars = Json::object();
    for (const auto& [k, v] : variables) vars[k] = v;
    j["variables"] = vars;
    Json trs = Json::array();
    for (const auto& t : transitions) {
        Json tj;
        tj["from"] = t.from;
        tj["endpoint"] = t.endpoint;
        if (t.guard) {
            tj["guard"] = Json{{"field", t.guard->field},
                               {"op", t.guard->op},
                               {"literal", t.guard->literal}};
        }
        tj["to"] = t.to;
        Json resp = Json::object();
        for (const auto& [k, v] : t.response) resp[k] = v;
        tj["response"] = resp;
        trs.push_back(std::move(tj));
    }
    j["transitions"] = trs;
    return j;
}

// ---------------------------------------------------------------------------
// Connector / provider / actuator specs

ConnectorSpec ConnectorSpec::from_json(const Json& j) {
    ConnectorSpec c;
    std::string kind = j.value("kind", std::string());
    if (kind == "in-sim") {
        c.kind = Kind::InSim;
        c.sink_node = j.at("sink_node").get<std::string>();
        c.via_node = j.at("via_node").get<std::string>();
    } else if (kind == "external-tcp") {
        c.kind = Kind::ExternalTcp;
        c.host = j.at("host").get<std::string>();
        c.port = j.at("port").get<int>();
    } else if (kind == "loopback") {
        c.kind = Kind::Loopback;
    } else {
        throw ValidationError("connector: unknown kind '" + kind + "'");
    }
    return c;
}

Json ConnectorSpec::to_json() const {
    Json j;
    switch (kind) {
    case Kind::InSim:
        j["kind"] = "in-sim";
        j["sink_node"] = sink_node;
        j["via_node"] = via_node;
        break;
    case Kind::ExternalTcp:
        j["kind"] = "external-tcp";
        j["host"] = host;
        j["port"] = port;
        break;
    case Kind::Loopback:
        j["kind"] = "loopback";
        break;
    }
    return j;
}

ProviderSpec ProviderSpec::from_json(const Json& j) {
    ProviderSpec p;
    p.device_id = j.at("device_id").get<std::string>();
    p.label = j.at("label").get<std::string>();
    p.generator = GeneratorSpec::from_json(j.at("generator"));
    p.period_ms = j.at("period_ms").get<SimTime>();
    if (p.period_ms <= 0) {
        throw ValidationError("provider '" + p.device_id + "': period_ms must be > 0");
    }
    p.transformer = transform_format_from_string(j.at("transformer").get<std::string>());
    p.connector = ConnectorSpec::from_json(j.at("connector"));
    if (p.label.empty()) {
        throw ValidationError("provider '" + p.device_id + "': label must be non-empty");
    }
    return p;
}

Json ProviderSpec::to_json() const {
    Json j;
    j["device_id"] = device_id;
    j["label"] = label;
    j["generator"] = generator.to_json();
    j["period_ms"] = period_ms;
    j["transformer"] = to_string(transformer);
    j["connector"] = connector.to_json();
    return j;
}

const EndpointDecl* ActuatorSpec::find_endpoint(const std::string& name) const {
    for (const auto& e : endpoints) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

void ActuatorSpec::validate() const {
    auto state_known = [&](const std::string& s) {
        return std::find(machine.states.begin(), machine.states.end(), s) !=
               machine.states.end();
    };
    if (!state_known(machine.initial)) {
        throw ValidationError("actuator '" + device_id + "': initial state '" +
                              machine.initial + "' not declared");
    }
    for (const auto& t : machine.transitions) {
        if (!state_known(t.from) || !state_known(t.to)) {
            throw ValidationError("actuator '" + device_id + "': transition " + t.from +
                                  "->" + t.to + " references undeclared state");
        }
        const EndpointDecl* ep = find_endpoint(t.endpoint);
        if (!ep) {
            throw ValidationError("actuator '" + device_id + "': transition endpoint '" +
                                  t.endpoint + "' not declared");
        }
        if (t.guard) {
            bool declared = false;
            for (const auto& f : ep->request_fields) {
                if (f.name == t.guard->field) declared = true;
            }
            if (!declared) {
                throw ValidationError("actuator '" + device_id + "': guard field '" +
                                      t.guard->field + "' not declared on endpoint '" +
                                      t.endpoint + "'");
            }
        }
    }
}

ActuatorSpec ActuatorSpec::from_json(const Json& j) {
    ActuatorSpec a;
    a.device_id = j.at("device_id").get<std::string>();
    for (const auto& e : j.at("endpoints")) {
        EndpointDecl d;
        d.name = e.at("name").get<std::string>();
        if (e.contains("request_fields")) {
            for (const auto& f : e["request_fields"]) {
                FieldDecl fd{f.at("name").get<std::string>(), f.at("type").get<std::string>()};
                if (fd.type != "number" && fd.type != "string" && fd.type != "bool") {
                    throw ValidationError("actuator '" + a.device_id + "': bad field type '" +
                                          fd.type + "'");
                }
                d.request_fields.push_back(std::move(fd));
            }
        }
        a.endpoints.push_back(std::move(d));
    }
    a.machine = StateMachineSpec::from_json(j.at("machine"));
    a.connector = ConnectorSpec::from_json(j.at("connector"));
    a.validate();
    return a;
}

Json ActuatorSpec::to_json() const {
    Json j;
    j["device_id"] = device_id;
    Json eps = Json::array();
    for (const auto& e : endpoints) {
        Json ej;
        ej["name"] = e.name;
        Json fields = Json::array();
        for (const auto& f : e.request_fields) {
            fields.push_back(Json{{"name", f.name}, {"type", f.type}});
        }
        ej["request_fields"] = fields;
        eps.push_back(std::move(ej));
    }
    j["endpoints"] = eps;
    j["machine"] = machine.to_json();
    j["connector"] = connector.to_json();
    return j;
}

// ---------------------------------------------------------------------------
// Actuator interpreter

namespace {

bool type_matches(const Json& v, const std::string& type) {
    if (type == "number") return v.is_number();
    if (type == "string") return v.is_string();
    if (type == "bool") return v.is_boolean();
    return false;
}

bool guard_passes(const Guard& g, const std::map<std::string, Json>& fields) {
    auto it = fields.find(g.field);
    if (it == fields.end()) return false;
    const Json& v = it->second;
    const Json& lit = g.literal;
    if (v.is_number() && lit.is_number()) {
        double a = v.get<double>(), b = lit.get<double>();
        if (g.op == "=") return a == b;
        if (g.op == "!=") return a != b;
        if (g.op == "<") return a < b;
        if (g.op == ">") return a > b;
        return false;
    }
    if (v.is_string() && lit.is_string()) {
        const auto &a = v.get_ref<const std::string&>(), &b = lit.get_ref<const std::string&>();
        if (g.op == "=") return a == b;
        if (g.op == "!=") return a != b;
        if (g.op == "<") return a < b;
        if (g.op == ">") return a > b;
        return false;
    }
    if (v.is_boolean() && lit.is_boolean()) {
        if (g.op == "=") return v == lit;
        if (g.op == "!=") return v != lit;
        return false;
    }
    return false;
}

std::string value_to_text(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return render_number(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

std::string interpolate(const std::string& tmpl, const std::string& state,
                        const std::map<std::string, Json>& fields,
                        const std::map<std::string, Json>& variables) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto open = tmpl.find("${", pos);
        if (open == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        out.append(tmpl, pos, open - pos);
        auto close = tmpl.find('}', open);
        if (close == std::string::npos) {
            out.append(tmpl, open, std::string::npos);
            break;
        }
        std::string key = tmpl.substr(open + 2, close - open - 2);
        if (key == "state") {
            out += state;
        } else if (key.rfind("req.", 0) == 0) {
            auto it = fields.find(key.substr(4));
            if (it != fields.end()) out += value_to_text(it->second);
        } else if (key.rfind("var.", 0) == 0) {
            auto it = variables.find(key.substr(4));
            if (it != variables.end()) out += value_to_text(it->second);
        }
        pos = close + 1;
    }
    return out;
}

Json error_response(const std::string& reason, const std::string& state) {
    Json r;
    r["status"] = "error";
    r["reason"] = reason;
    r["state"] = state;
    return r;
}

} // namespace

ActuatorResult actuator_handle(const ActuatorSpec& spec, const std::string& current_state,
                               const std::map<std::string, Json>& variables,
                               const ActuatorRequest& request) {
    ActuatorResult result;
    result.new_state = current_state;

    const EndpointDecl* ep = spec.find_endpoint(request.endpoint);
    if (!ep) {
        result.response = error_response("bad-request", current_state);
        return result;
    }
    if (request.fields.size() != ep->request_fields.size()) {
        result.response = error_response("bad-request", current_state);
        return result;
    }
    for (const auto& decl : ep->request_fields) {
        auto it = request.fields.find(decl.name);
        if (it == request.fields.end() || !type_matches(it->second, decl.type)) {
            result.response = error_response("bad-request", current_state);
            return result;
        }
    }

    for (const auto& t : spec.machine.transitions) {
        if (t.from != current_state || t.endpoint != request.endpoint) continue;
        if (t.guard && !guard_passes(*t.guard, request.fields)) continue;
        result.new_state = t.to;
        Json data = Json::object();
        for (const auto& [k, tmpl] : t.response) {
            // a template that is exactly one placeholder keeps its type
            if (tmpl.size() > 3 && tmpl.rfind("${", 0) == 0 && tmpl.back() == '}' &&
                tmpl.find('}') == tmpl.size() - 1) {
                std::string key = tmpl.substr(2, tmpl.size() - 3);
                if (key.rfind("req.", 0) == 0) {
                    auto it = request.fields.find(key.substr(4));
                    if (it != request.fields.end()) {
                        data[k] = it->second;
                        continue;
                    }
                } else if (key.rfind("var.", 0) == 0) {
                    auto it = variables.find(key.substr(4));
                    if (it != variables.end()) {
                        data[k] = it->second;
                        continue;
                    }
                }
            }
            data[k] = interpolate(tmpl, t.to, request.fields, variables);
        }
        Json resp;
        resp["status"] = "ok";
        resp["state"] = t.to;
        resp["data"] = std::move(data);
        result.response = std::move(resp);
        return result;
    }

    result.response = error_response("no-transition", current_state);
    return result;
}

std::string encode_request(const ActuatorRequest& req) {
    Json j;
    j["endpoint"] = req.endpoint;
    Json fields = Json::object();
    for (const auto& [k, v] : req.fields) fields[k] = v;
    j["fields"] = fields;
    return j.dump() + "\n";
}

std::optional<ActuatorRequest> decode_request(const std::string& line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
    if (!j.is_object() || !j.contains("endpoint") || !j["endpoint"].is_string()) {
        return std::nullopt;
    }
    ActuatorRequest req;
    req.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("fields")) {
        if (!j["fields"].is_object()) return std::nullopt;
        for (auto it = j["fields"].begin(); it != j["fields"].end(); ++it) {
            req.fields[it.key()] = it.value();
        }
    }
    return req;
}

} // namespace patriot
