#include <doctest.h>

#include "patriot/collector.hpp"
#include "patriot/errors.hpp"

using namespace patriot;

TEST_SUITE("collector") {

TEST_CASE("seq is dense from zero in submission order") {
    CollectorLog log(1, "abc");
    CHECK(log.record(0, "data", Json{{"v", 1}}) == 0);
    CHECK(log.record(5, "data", Json{{"v", 2}}) == 1);
    CHECK(log.record(5, "data", Json{{"v", 3}}) == 2);
    CHECK(log.records()[1].t == 5);
}

TEST_CASE("recording after finalize fails") {
    CollectorLog log(1, "abc");
    log.record(0, "data", Json{});
    log.finalize();
    CHECK_THROWS_AS(log.record(1, "data", Json{}), ValidationError);
}

TEST_CASE("plog round-trip") {
    CollectorLog log(42, "cafe");
    log.record(0, "data", Json{{"device", "d"}, {"value", 21.5}});
    log.record(3, "test-event", Json{{"event", "x"}});
    log.finalize();
    CollectorLog back = CollectorLog::from_plog(log.to_plog());
    CHECK(back.seed() == 42);
    CHECK(back.config_hash() == "cafe");
    CHECK(diff_logs(log, back).empty());
}

TEST_CASE("diff ignores created_wall") {
    CollectorLog a(1, "h");
    CollectorLog b(1, "h");
    a.record(0, "data", Json{{"v", 1}});
    b.record(0, "data", Json{{"v", 1}});
    CHECK(diff_logs(a, b).empty()); // created_wall may differ
}

TEST_CASE("diff reports header and record divergences") {
    CollectorLog a(1, "h");
    CollectorLog b(2, "h");
    auto div = diff_logs(a, b);
    REQUIRE(!div.empty());
    CHECK(div[0].seq == -1);
    CHECK(div[0].field == "seed");

    CollectorLog c(1, "h");
    CollectorLog d(1, "h");
    c.record(0, "data", Json{{"v", 1}});
    d.record(0, "data", Json{{"v", 2}});
    auto div2 = diff_logs(c, d);
    REQUIRE(!div2.empty());
    CHECK(div2[0].seq == 0);

    CollectorLog e(1, "h");
    e.record(0, "data", Json{{"v", 1}});
    e.record(1, "data", Json{{"v", 1}});
    CollectorLog f(1, "h");
    f.record(0, "data", Json{{"v", 1}});
    auto div3 = diff_logs(e, f);
    REQUIRE(!div3.empty());
    CHECK(div3[0].field == "length");
}

TEST_CASE("unsupported version is rejected") {
    std::string bytes = R"({"version":9,"seed":1,"config_hash":"h","created_wall":"x"})";
    bytes += "\n";
    CHECK_THROWS_AS(CollectorLog::from_plog(bytes), ValidationError);
    CHECK_THROWS_AS(CollectorLog::from_plog("not json\n"), ValidationError);
    CHECK_THROWS_AS(CollectorLog::from_plog(""), ValidationError);
}

} // TEST_SUITE
