#include <doctest.h>

#include <cmath>

#include "patriot/device.hpp"
#include "patriot/errors.hpp"
#include "support/reference.hpp"

using namespace patriot;

namespace {

GeneratorSpec make_walk(double start, double stddev, double min, double max) {
    GeneratorSpec g;
    g.kind = GeneratorSpec::Kind::RandomWalk;
    g.start = start;
    g.step_stddev = stddev;
    g.min = min;
    g.max = max;
    return g;
}

double sample_number(const GeneratorSpec& g, std::int64_t k, SimTime t,
                     GeneratorState& st, RngStream& rng) {
    return std::get<double>(next_sample(g, k, t, st, rng));
}

ActuatorSpec garage_door() {
    ActuatorSpec a;
    a.device_id = "d";
    a.endpoints = {{"open", {}}, {"close", {}}};
    a.machine.states = {"closed", "open"};
    a.machine.initial = "closed";
    a.machine.transitions = {
        {"closed", "open", std::nullopt, "open", {{"state", "${state}"}}},
        {"open", "close", std::nullopt, "closed", {}},
    };
    return a;
}

} // namespace

TEST_SUITE("device") {

TEST_CASE("constant and linear generators") {
    GeneratorState st;
    RngStream rng = RngStream::derived(1, "p");
    GeneratorSpec c;
    c.kind = GeneratorSpec::Kind::Constant;
    c.value = 21.5;
    CHECK(sample_number(c, 0, 0, st, rng) == 21.5);
    CHECK(sample_number(c, 7, 700, st, rng) == 21.5);

    GeneratorSpec l;
    l.kind = GeneratorSpec::Kind::Linear;
    l.start = 0;
    l.slope_per_sample = 2;
    CHECK(sample_number(l, 3, 300, st, rng) == 6.0);
}

TEST_CASE("sinusoid at a quarter period with no noise") {
    GeneratorSpec s;
    s.kind = GeneratorSpec::Kind::Sinusoid;
    s.mean = 20;
    s.amplitude = 5;
    s.period_samples = 24;
    s.noise_stddev = 0;
    GeneratorState st;
    RngStream rng = RngStream::derived(1, "p");
    CHECK(sample_number(s, 6, 0, st, rng) == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("sinusoid consumes gaussian draws even at noise 0") {
    GeneratorSpec s;
    s.kind = GeneratorSpec::Kind::Sinusoid;
    s.mean = 0;
    s.amplitude = 1;
    s.period_samples = 4;
    s.noise_stddev = 0;
    GeneratorState st;
    RngStream rng = RngStream::derived(1, "p");
    std::uint64_t oracle = rng.state();
    sample_number(s, 0, 0, st, rng);
    ref::gaussian(oracle, 0, 0);
    CHECK(rng.state() == oracle);
}

TEST_CASE("trajectory interpolates and clamps") {
    GeneratorSpec t;
    t.kind = GeneratorSpec::Kind::Trajectory;
    t.waypoints = {{0, 50.0, 14.0}, {1000, 50.1, 14.1}};
    GeneratorState st;
    RngStream rng = RngStream::derived(1, "p");
    auto mid = std::get<LatLon>(next_sample(t, 1, 500, st, rng));
    CHECK(mid.lat == doctest::Approx(50.05));
    CHECK(mid.lon == doctest::Approx(14.05));
    auto after = std::get<LatLon>(next_sample(t, 2, 5000, st, rng));
    CHECK(after.lat == 50.1);
    auto before = std::get<LatLon>(next_sample(t, 0, 0, st, rng));
    CHECK(before.lat == 50.0);
}

TEST_CASE("random walk follows the PRNG oracle and stays in bounds") {
    GeneratorSpec w = make_walk(10, 1, 0, 20);
    GeneratorState st;
    RngStream rng(42, "w");
    std::uint64_t oracle = 42;
    double expect = 10;
    CHECK(sample_number(w, 0, 0, st, rng) == 10.0);
    for (std::int64_t k = 1; k <= 5; ++k) {
        double got = sample_number(w, k, k * 100, st, rng);
        expect = std::clamp(expect + ref::gaussian(oracle, 0, 1), 0.0, 20.0);
        CHECK(got == expect);
        CHECK(got >= 0.0);
        CHECK(got <= 20.0);
    }
}

TEST_CASE("generator validation") {
    GeneratorSpec w = make_walk(30, 1, 0, 20); // start outside [min,max]
    CHECK_THROWS_AS(w.validate(), ValidationError);
    GeneratorSpec s;
    s.kind = GeneratorSpec::Kind::Sinusoid;
    s.period_samples = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    GeneratorSpec t;
    t.kind = GeneratorSpec::Kind::Trajectory;
    CHECK_THROWS_AS(t.validate(), ValidationError); // no waypoints
    t.waypoints = {{5, 0, 0}, {5, 1, 1}};
    CHECK_THROWS_AS(t.validate(), ValidationError); // not strictly increasing
}

TEST_CASE("render_number") {
    CHECK(render_number(6.0) == "6");
    CHECK(render_number(21.5) == "21.5");
    CHECK(render_number(-3.0) == "-3");
    CHECK(render_number(0.123456789) == "0.123456789");
    CHECK(render_number(1.100000000) == "1.1");
}

TEST_CASE("transform wire formats") {
    DataPoint dp{"h1.t1", "temperature", 5, 21.5};
    CHECK(transform(dp, TransformFormat::JsonLines) ==
          "{\"device\":\"h1.t1\",\"label\":\"temperature\",\"t\":5,\"value\":21.5}\n");
    CHECK(transform(dp, TransformFormat::Csv) == "h1.t1,temperature,5,21.5\n");
    CHECK(transform(dp, TransformFormat::Plain) == "temperature=21.5@5\n");

    DataPoint whole{"d", "x", 1, 6.0};
    CHECK(transform(whole, TransformFormat::Csv) == "d,x,1,6\n");

    DataPoint pos{"d", "position", 2, LatLon{50.05, 14.1}};
    CHECK(transform(pos, TransformFormat::JsonLines) ==
          "{\"device\":\"d\",\"label\":\"position\",\"t\":2,\"value\":[50.05,14.1]}\n");
    CHECK(transform(pos, TransformFormat::Csv) == "d,position,2,50.05;14.1\n");
}

TEST_CASE("transform/parse round-trip for json-lines and csv") {
    RngStream rng = RngStream::derived(3, "fuzz");
    // the wire format carries at most 9 decimal places
    auto quantize = [](double v) { return std::round(v * 1e9) / 1e9; };
    for (int i = 0; i < 200; ++i) {
        DataPoint dp;
        dp.device = "dev" + std::to_string(i % 7);
        dp.label = "label" + std::to_string(i % 5);
        dp.t = static_cast<SimTime>(rng.next_u64() % 100000);
        if (i % 4 == 0) {
            dp.value = LatLon{quantize(rng.uniform() * 180 - 90),
                              quantize(rng.uniform() * 360 - 180)};
        } else {
            dp.value = quantize(rng.uniform() * 1000 - 500);
        }
        for (auto fmt : {TransformFormat::JsonLines, TransformFormat::Csv}) {
            DataPoint back = parse_datapoint(transform(dp, fmt), fmt);
            CHECK(back.device == dp.device);
            CHECK(back.label == dp.label);
            CHECK(back.t == dp.t);
            CHECK(back.value == dp.value);
        }
    }
    CHECK_THROWS_AS(parse_datapoint("x=1@2\n", TransformFormat::Plain), ValidationError);
}

TEST_CASE("actuator first-match transition semantics") {
    ActuatorSpec door = garage_door();
    door.validate();
    auto r = actuator_handle(door, "closed", {}, {"open", {}});
    CHECK(r.response["status"] == "ok");
    CHECK(r.new_state == "open");
    CHECK(r.response["state"] == "open");
    CHECK(r.response["data"]["state"] == "open"); // template sees the new state

    auto again = actuator_handle(door, "open", {}, {"open", {}});
    CHECK(again.response["status"] == "error");
    CHECK(again.response["reason"] == "no-transition");
    CHECK(again.new_state == "open");
}

TEST_CASE("actuator request validation") {
    ActuatorSpec door = garage_door();
    auto bad = actuator_handle(door, "closed", {}, {"explode", {}});
    CHECK(bad.response["reason"] == "bad-request");

    ActuatorSpec coffee;
    coffee.device_id = "c";
    coffee.endpoints = {{"brew", {{"cups", "number"}}}};
    coffee.machine.states = {"idle", "brewing"};
    coffee.machine.initial = "idle";
    Transition t{"idle", "brew", Guard{"cups", ">", Json(0)}, "brewing",
                 {{"cups", "${req.cups}"}}};
    coffee.machine.transitions = {t};
    coffee.validate();

    auto wrong_type = actuator_handle(coffee, "idle", {}, {"brew", {{"cups", Json("two")}}});
    CHECK(wrong_type.response["reason"] == "bad-request");
    auto missing = actuator_handle(coffee, "idle", {}, {"brew", {}});
    CHECK(missing.response["reason"] == "bad-request");
    auto guarded_out = actuator_handle(coffee, "idle", {}, {"brew", {{"cups", Json(0)}}});
    CHECK(guarded_out.response["reason"] == "no-transition");
    auto ok = actuator_handle(coffee, "idle", {}, {"brew", {{"cups", Json(2)}}});
    CHECK(ok.response["status"] == "ok");
    CHECK(ok.new_state == "brewing");
    CHECK(ok.response["data"]["cups"] == 2);
}

TEST_CASE("spec validation catches dangling references") {
    ActuatorSpec a = garage_door();
    a.machine.initial = "ajar";
    CHECK_THROWS_AS(a.validate(), ValidationError);

    ActuatorSpec b = garage_door();
    b.machine.transitions.push_back({"open", "lock", std::nullopt, "open", {}});
    CHECK_THROWS_AS(b.validate(), ValidationError); // undeclared endpoint
}

TEST_CASE("request wire coding") {
    ActuatorRequest req{"brew", {{"cups", Json(2)}}};
    std::string line = encode_request(req);
    CHECK(line == "{\"endpoint\":\"brew\",\"fields\":{\"cups\":2}}\n");
    auto back = decode_request(line);
    REQUIRE(back.has_value());
    CHECK(back->endpoint == "brew");
    CHECK(back->fields.at("cups") == 2);
    CHECK_FALSE(decode_request("not json").has_value());
    CHECK_FALSE(decode_request("{\"fields\":{}}").has_value());
}

} // TEST_SUITE
