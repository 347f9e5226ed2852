#include "lsn/graph.hpp"

#include "../support/oracles.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <random>

using namespace lsn;
using testing::make_graph;

TEST_CASE("valid two-node loop")
{
    const auto g = make_graph(2, {{0, 1, 1}, {1, 0, 1}});
    const auto rep = validate_lsn(g);
    CHECK(rep.ok());
    CHECK_FALSE(rep.truncated);
    CHECK_FALSE(find_nonpositive_cycle(g).has_value());
}

TEST_CASE("self-loop and duplicate edge are reported")
{
    const auto g = make_graph(2, {{0, 0, 3}, {0, 1, 1}, {0, 1, 2}});
    const auto rep = validate_lsn(g);
    REQUIRE(rep.violations.size() == 2);
    int self = 0;
    int dup = 0;
    for (const auto &v : rep.violations)
    {
        self += v.kind == ViolationKind::SelfLoop;
        dup += v.kind == ViolationKind::DuplicateEdge;
    }
    CHECK(self == 1);
    CHECK(dup == 1);
}

TEST_CASE("zero-sum cycle carries its witness")
{
    const auto g = make_graph(3, {{0, 1, 2}, {1, 0, -2}, {1, 2, 5}});
    const auto rep = validate_lsn(g);
    REQUIRE(rep.violations.size() == 1);
    const auto &v = rep.violations.front();
    CHECK(v.kind == ViolationKind::NonpositiveCycle);
    CHECK(v.witness.size() == 2);
    CHECK(cycle_delay(g, v.witness) == 0);
    const auto bf = find_nonpositive_cycle(g);
    REQUIRE(bf.has_value());
    CHECK(cycle_delay(g, *bf) <= 0);
}

TEST_CASE("validation agrees with exhaustive cycle enumeration")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> nodes(2, 6);
    std::uniform_int_distribution<int> lam(-3, 4);
    std::bernoulli_distribution present(0.4);
    for (int iter = 0; iter < 300; ++iter)
    {
        LsnGraph g;
        const int n = nodes(rng);
        for (int i = 0; i < n; ++i)
        {
            g.names.push_back("n" + std::to_string(i));
        }
        for (MachineId a = 0; a < static_cast<MachineId>(n); ++a)
        {
            for (MachineId b = 0; b < static_cast<MachineId>(n); ++b)
            {
                if (a != b && present(rng))
                {
                    g.edges.push_back({a, b, lam(rng)});
                }
            }
        }
        std::size_t bad = 0;
        for (const auto &cyc : oracle::simple_cycles(g))
        {
            bad += oracle::cycle_sum(g, cyc) <= 0;
        }
        const auto rep = validate_lsn(g);
        REQUIRE_FALSE(rep.truncated);
        CHECK(rep.violations.size() == bad);
        for (const auto &v : rep.violations)
        {
            CHECK(oracle::cycle_sum(g, v.witness) <= 0);
        }
        CHECK(find_nonpositive_cycle(g).has_value() == (bad > 0));
    }
}

TEST_CASE("normalization keeps cycle sums and removes negative edges")
{
    std::mt19937_64 rng(5);
    for (int iter = 0; iter < 100; ++iter)
    {
        const auto g = oracle::random_mixed_sign_lsn(rng, 7);
        const auto n = normalize_nonnegative(g);
        REQUIRE(n.graph.edges.size() == g.edges.size());
        for (std::size_t e = 0; e < g.edges.size(); ++e)
        {
            const auto &a = g.edges[e];
            const auto &b = n.graph.edges[e];
            CHECK(b.lambda >= 0);
            CHECK(b.lambda == a.lambda + n.offsets[a.src] - n.offsets[a.dst]);
        }
        for (const auto &cyc : oracle::simple_cycles(g))
        {
            CHECK(oracle::cycle_sum(n.graph, cyc) == oracle::cycle_sum(g, cyc));
        }
    }
}

TEST_CASE("normalization refuses non-positive cycles")
{
    const auto g = make_graph(2, {{0, 1, 1}, {1, 0, -1}});
    CHECK_THROWS_AS(normalize_nonnegative(g), GraphError);
}

TEST_CASE("path delays")
{
    const auto g = make_graph(3, {{0, 1, 2}, {1, 2, -1}, {2, 0, 4}});
    const std::vector<MachineId> path{0, 1, 2};
    CHECK(cumulative_path_delay(g, path) == 1);
    CHECK(cycle_delay(g, path) == 5);
    const std::vector<MachineId> broken{0, 2};
    try
    {
        (void)cumulative_path_delay(g, broken);
        FAIL("expected GraphError");
    }
    catch (const GraphError &e)
    {
        CHECK(std::string(e.what()).find("a") != std::string::npos);
        CHECK(std::string(e.what()).find("c") != std::string::npos);
    }
}

TEST_CASE("on_cycle")
{
    const auto g = make_graph(4, {{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 3, 1}});
    CHECK(on_cycle(g, 0));
    CHECK(on_cycle(g, 1));
    CHECK_FALSE(on_cycle(g, 2));
    CHECK_FALSE(on_cycle(g, 3));
}
