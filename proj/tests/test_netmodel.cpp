#include "doctest.h"

#include <set>

#include "p2pgrid/netmodel.hpp"

using namespace p2pgrid;

namespace {

std::string two_bus_text() {
    return "base 12.66 10\n"
           "root 1\n"
           "node 1 0 0 0.9 1.05 none\n"
           "node 2 100 60 0.9 1.05 consumer\n"
           "line 1 2 0.0922 0.0477 0.5 6000\n"
           "gen 1 grid 10000 -10000 10000 30\n";
}

} // namespace

TEST_CASE("bundled 33-node feeder loads and validates") {
    Network net = load_feeder(std::string(P2PGRID_DATA_DIR) + "/feeder33.dat");
    CHECK(net.nodes.size() == 33);
    CHECK(net.lines.size() == 32);
    CHECK(net.root == 1);
    CHECK(validate_radial(net).empty());

    double total_p = 0, total_q = 0;
    for (const auto& n : net.nodes) {
        total_p += n.load_p_kw;
        total_q += n.load_q_kvar;
    }
    CHECK(total_p == doctest::Approx(3715.0));
    CHECK(total_q == doctest::Approx(2300.0));
}

TEST_CASE("two-node feeder parses to the smallest valid tree") {
    Network net = parse_feeder_text(two_bus_text(), "inline");
    CHECK(net.nodes.size() == 2);
    CHECK(net.lines.size() == 1);
    CHECK(ancestor(net, 2) == 1);
}

TEST_CASE("duplicated line is rejected as not a tree") {
    std::string text = two_bus_text() + "line 1 2 0.1 0.1 0.5 6000\n";
    CHECK_THROWS_WITH_AS(parse_feeder_text(text, "inline"),
                         doctest::Contains("not a rooted tree"), ValidationError);
}

TEST_CASE("validate_radial flags cycles and disconnection") {
    Network star;
    star.base_kv = 1;
    star.base_mva = 1;
    star.root = 1;
    for (int id : {1, 2, 3, 4}) {
        Node n;
        n.id = id;
        n.load_p_kw = id == 1 ? 0 : 10;
        n.load_q_kvar = 0;
        star.nodes.push_back(n);
    }
    for (int id : {2, 3, 4}) star.lines.push_back(Line{1, id, 0.01, 0.01, 0.5, 100});
    CHECK(validate_radial(star).empty());

    Network tri = star;
    tri.nodes.resize(3);
    tri.lines.clear();
    tri.lines.push_back(Line{1, 2, 0.01, 0.01, 0.5, 100});
    tri.lines.push_back(Line{2, 3, 0.01, 0.01, 0.5, 100});
    tri.lines.push_back(Line{3, 1, 0.01, 0.01, 0.5, 100}); // closes the loop
    auto viol = validate_radial(tri);
    CHECK(!viol.empty());
    bool mentions_cycle_or_parent = false;
    for (const auto& v : viol)
        if (v.find("cycle") != std::string::npos || v.find("incoming") != std::string::npos)
            mentions_cycle_or_parent = true;
    CHECK(mentions_cycle_or_parent);

    Network disc = star;
    disc.lines.pop_back(); // node 4 unreachable, also edge count breaks
    auto viol2 = validate_radial(disc);
    bool unreachable = false;
    for (const auto& v : viol2)
        if (v.find("unreachable") != std::string::npos) unreachable = true;
    CHECK(unreachable);
}

TEST_CASE("ancestor walks terminate at the root") {
    Network net = load_feeder(std::string(P2PGRID_DATA_DIR) + "/feeder33.dat");
    CHECK(ancestor(net, 2) == 1);
    CHECK_THROWS_AS(ancestor(net, net.root), ValidationError);
    for (const auto& n : net.nodes) {
        if (n.id == net.root) continue;
        int cur = n.id;
        std::size_t steps = 0;
        while (cur != net.root) {
            cur = ancestor(net, cur);
            ++steps;
            REQUIRE(steps <= net.nodes.size());
        }
    }
}

TEST_CASE("feeder serialization round-trips") {
    Network net = load_feeder(std::string(P2PGRID_DATA_DIR) + "/feeder33.dat");
    Network again = parse_feeder_text(serialize_feeder(net), "roundtrip");
    CHECK(net == again);
}

TEST_CASE("parse errors carry line context") {
    std::string text = "base 12.66 10\nroot 1\nnode 1 0 0 0.9 1.05 nope\n";
    CHECK_THROWS_WITH_AS(parse_feeder_text(text, "feeder.dat"),
                         doctest::Contains("feeder.dat:3"), ParseError);
}

TEST_CASE("profiles parse, expand and validate") {
    Profiles p = load_profiles(std::string(P2PGRID_DATA_DIR) + "/profiles_day.dat");
    CHECK(p.horizon == 96);
    CHECK(p.dt_minutes == 15);
    CHECK(p.lmp_usd_mwh.size() == 96);
    // hourly step interpolation repeats each value four times
    CHECK(p.lmp_usd_mwh[0] == p.lmp_usd_mwh[3]);
    CHECK(p.load_mult_at(0, 5) == doctest::Approx(0.58));
    CHECK(p.pv_fraction_at(48, 3) == doctest::Approx(0.92));
    CHECK(p.pv_fraction_at(48, 7) == 0.0);

    Network net = load_feeder(std::string(P2PGRID_DATA_DIR) + "/feeder33.dat");
    CHECK_NOTHROW(validate_profiles(net, p));

    Profiles bad = p;
    bad.voll_usd_mwh = 10.0; // below the DG cost
    CHECK_THROWS_AS(validate_profiles(net, bad), ValidationError);
}

TEST_CASE("scenario bundles resolve and cross-validate") {
    Scenario sc = load_scenario(std::string(P2PGRID_SCENARIO_DIR) + "/day_outage.cfg");
    CHECK(sc.network.nodes.size() == 33);
    CHECK(sc.config.p2p_enabled);
    REQUIRE(sc.config.outages.size() == 1);
    CHECK(sc.config.outages[0].start == 32);
    CHECK(sc.config.outages[0].duration == 44);
    CHECK(sc.network.zone_of(5) == 1);
    CHECK(sc.network.zone_of(20) == 2);
    CHECK(sc.network.zone_of(33) == 3);
    std::set<int> zones;
    for (const auto& n : sc.network.nodes) zones.insert(sc.network.zone_of(n.id));
    CHECK(zones == std::set<int>{1, 2, 3});
}
