#include "lsn/metrics.hpp"
#include "lsn/simulate.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <sstream>

using namespace lsn;
using testing::E;
using testing::make_config;

namespace
{
    // two 1 Hz machines without frequency control, so occupancy holds at C/2
    SimConfig locked_pair(std::int64_t cap)
    {
        auto c = make_config({{"a", 1.0}, {"b", 1.0}}, {{"a", "b", 2.0, std::nullopt, cap}, {"b", "a", 2.0, std::nullopt, cap}},
                             Model::Bittide);
        c.controller.kind = ControlKind::Proportional;
        c.controller.kp = 0.0;
        return c;
    }
}

TEST_CASE("firing rate windows")
{
    const auto c = make_config({{"solo", 1.0}}, {}, Model::Kpn);
    const auto t = run(c, Model::Kpn, SimTime::from_seconds(100.0));
    const auto r = firing_rate(t, 0, 10.0);
    REQUIRE(r.windows.size() == 10);
    for (const auto &w : r.windows)
    {
        CHECK(w.rate_hz == doctest::Approx(1.0));
    }
    CHECK(r.windows[3].start == SimTime::from_seconds(30.0));
    CHECK(firing_rate(t, 0, 7.0).windows.size() == 14);
    CHECK_THROWS_AS(firing_rate(t, 0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(firing_rate(t, 0, -1.0), std::invalid_argument);
    CHECK(mean_firing_rate(t, 0, SimTime{}, SimTime::from_seconds(100.0)) == doctest::Approx(1.0));
}

TEST_CASE("loop rate and period")
{
    const auto c = load_config(testing::config_dir / "pair_m1.json");
    const auto t = run(c);
    CHECK(trace_end(t) == SimTime::from_seconds(60.0));
    CHECK(mean_firing_rate(t, 0, SimTime{}, SimTime::from_seconds(60.0)) == doctest::Approx(1.0 / 3.0));
    const auto p = mean_firing_period(t, 1, SimTime::from_seconds(10.0));
    REQUIRE(p.has_value());
    CHECK(*p == doctest::Approx(3.0));
    CHECK_FALSE(mean_firing_period(t, 1, SimTime::from_seconds(58.0)).has_value());
    CHECK(steady_state_start(t) >= SimTime::from_seconds(12.0));
}

TEST_CASE("latency through a half-full elastic buffer")
{
    for (auto [cap, want] : {std::pair{6, 5.0}, std::pair{8, 6.0}})
    {
        CAPTURE(cap);
        const auto t = run(locked_pair(cap), Model::Bittide, SimTime::from_seconds(60.0));
        REQUIRE_FALSE(t.aborted());
        const auto lat = channel_latency(t, 0);
        REQUIRE(lat.tau_s.size() > 40);
        // l + (C/2) / ω
        CHECK(lat.mean_s == doctest::Approx(want).epsilon(0.2));
        CHECK(std::abs(lat.mean_s - want) <= 1.0);
        CHECK(std::abs(lat.predicted_s - want) <= 1.0);
        CHECK(lat.min_s >= 2.0);
        for (auto s : lat.seqs)
        {
            CHECK(s >= 0);
        }
        const auto occ = occupancy_stats(t, 0, SimTime::from_seconds(5.0));
        CHECK(occ.mean == doctest::Approx(cap / 2.0));
        CHECK(occ.capacity == cap);
        CHECK(occ.min >= cap / 2 - 1);
        CHECK(occ.max <= cap / 2 + 1);
        CHECK(mean_omega(t, 1) == doctest::Approx(1.0));
    }
}

TEST_CASE("slow producer into a fast consumer waits about the link delay")
{
    auto c = make_config({{"p", 1.0}, {"q", 2.0}}, {{"p", "q", 2.0, 0, 10}});
    const auto t = run(c, Model::Ffp, SimTime::from_seconds(60.0));
    const auto lat = channel_latency(t, 0, SimTime::from_seconds(5.0));
    REQUIRE(lat.tau_s.size() > 40);
    CHECK(lat.consumer_period_s == doctest::Approx(0.5));
    CHECK(lat.min_s >= 2.0);
    CHECK(lat.max_s <= 2.0 + lat.consumer_period_s);
    CHECK(std::abs(lat.mean_s - 2.0) <= lat.consumer_period_s);
}

TEST_CASE("invariance holds on clean runs")
{
    for (const char *name : {"pair_m1.json", "triple.json", "mesh4.json"})
    {
        const auto c = load_config(testing::config_dir / name);
        for (Model m : {Model::Kpn, Model::Ffp, Model::Lsfp, Model::Bittide})
        {
            CAPTURE(name);
            CAPTURE(to_string(m));
            const auto t = run(c, m, SimTime::from_seconds(80.0));
            const auto rep = invariance_report(t);
            CHECK(rep.ok());
            CHECK(rep.firings > 0);
            for (const auto &v : rep.edges)
            {
                CHECK(v.state_lambdas == std::set<std::int64_t>{v.expected});
            }
        }
    }
}

TEST_CASE("a dropped frame breaks the invariant")
{
    const auto c = load_config(testing::data_dir / "pair_lossy.json");
    const auto t = run(c);
    const auto rep = invariance_report(t);
    CHECK_FALSE(rep.ok());
    CHECK_FALSE(rep.edges[0].ok());
    CHECK(rep.edges[0].state_lambdas.size() > 1);
}

TEST_CASE("a doctored consumption breaks the invariant")
{
    const auto c = load_config(testing::config_dir / "pair_m1.json");
    auto t = run(c);
    REQUIRE(invariance_report(t).ok());
    for (auto &r : t.records)
    {
        if (r.kind == RecordKind::Fire && r.machine == 1 && r.theta_after == 6)
        {
            r.consumed[0].seq += 1;
            break;
        }
    }
    const auto rep = invariance_report(t);
    CHECK_FALSE(rep.ok());
    CHECK(rep.edges[0].frame_lambdas.size() == 2);
    CHECK(rep.edges[1].ok());
}

TEST_CASE("empty trace is vacuously invariant")
{
    const auto c = load_config(testing::config_dir / "pair_m1.json");
    auto t = run(c, Model::Ffp, SimTime::from_seconds(1.0));
    t.records.clear();
    const auto rep = invariance_report(t);
    CHECK(rep.ok());
    REQUIRE_FALSE(rep.warnings.empty());
    CHECK(rep.warnings[0].find("empty") != std::string::npos);
}

TEST_CASE("slowest machine")
{
    const auto ring = load_config(testing::config_dir / "ring5.json");
    CHECK(slowest_machine(ring.topology) == 0);
    const auto tie = make_config({{"x", 2.0}, {"y", 1.0}, {"z", 1.0}}, {});
    CHECK(slowest_machine(tie.topology) == 1);
}

TEST_CASE("marking sweep")
{
    auto c = load_config(testing::config_dir / "ring5.json");
    const auto edge = *c.topology.find_edge("E", "A");
    const auto one = sweep_marking(c, edge, 1, 1, SimTime::from_seconds(200.0));
    REQUIRE(one.rows.size() == 1);
    CHECK(one.rows[0].marking == 1);
    CHECK(one.rows[0].latency_pct == doctest::Approx(100.0));

    // one token per loop traversal: rate = m / (loop time), 13 s here
    const auto r = sweep_marking(c, edge, 1, 4, SimTime::from_seconds(300.0));
    REQUIRE(r.rows.size() == 4);
    CHECK(r.designated == 0);
    for (std::size_t k = 0; k < r.rows.size(); ++k)
    {
        const auto &row = r.rows[k];
        CHECK_FALSE(row.aborted);
        CHECK(row.rate_hz == doctest::Approx(static_cast<double>(row.marking) / 13.0).epsilon(0.03));
        CHECK(row.rate_pct == doctest::Approx(100.0 * row.rate_hz));
        if (k > 0)
        {
            CHECK(row.rate_hz >= r.rows[k - 1].rate_hz);
        }
    }

    CHECK_THROWS_AS(sweep_marking(c, edge, 3, 2, SimTime::from_seconds(10.0)), ConfigError);
    CHECK_THROWS_AS(sweep_marking(c, 99, 1, 2, SimTime::from_seconds(10.0)), ConfigError);
    c.model = Model::Bittide;
    CHECK_THROWS_AS(sweep_marking(c, edge, 1, 2, SimTime::from_seconds(10.0)), ConfigError);
    c.model = Model::Kpn;
    CHECK_THROWS_AS(sweep_marking(c, edge, 1, 2, SimTime::from_seconds(10.0)), ConfigError);
}

TEST_CASE("plot data layout")
{
    std::ostringstream os;
    write_plot_data(os, {{"a", {{0.0, 1.0}, {1.0, 2.5}}}, {"b", {{2.0, 3.0}}}});
    CHECK(os.str() == "# a\n0 1\n1 2.5\n\n\n# b\n2 3\n");

    const auto c = load_config(testing::config_dir / "pair_m1.json");
    const auto t = run(c);
    const auto rs = rate_series(t, 10.0);
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].name == "A");
    CHECK(rs[0].points.size() == 6);
    const auto os2 = occupancy_series(t);
    REQUIRE(os2.size() == 2);
    CHECK(os2[1].name == "B->A");
    CHECK(os2[1].points.front().second == 0.0); // A consumes its pre-loaded token at t = 0
}

TEST_CASE("summary")
{
    const auto c = load_config(testing::config_dir / "pair_m1.json");
    const auto t = run(c);
    const auto j = summary_json(t);
    CHECK(j["backend"] == "ffp");
    CHECK(j["invariance_ok"] == true);
    REQUIRE(j["machines"].size() == 2);
    CHECK(j["machines"][0]["fires"] == 20);
    CHECK(j["machines"][0]["steady_period_s"].get<double>() == doctest::Approx(3.0));
    CHECK(j["edges"][0]["lambda"] == 1);
    CHECK_FALSE(j.contains("abort"));

    std::ostringstream csv;
    write_rate_csv(csv, t, 30.0);
    CHECK(csv.str() == "machine,window_start_s,rate_hz\nA,0,0.333333\nA,30,0.333333\nB,0,0.333333\nB,30,0.333333\n");
}
