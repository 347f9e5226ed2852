// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "lsn/extended_graph.hpp"
#include "lsn/ffp.hpp"
#include "lsn/graph.hpp"
#include "lsn/metrics.hpp"
#include "lsn/simulate.hpp"

#include "../support/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace fs = std::filesystem;
using namespace lsn;

namespace
{
    const fs::path config_dir = LSN_CONFIG_DIR;
    const char *bundled[] = {"pair_m1", "pair_m3", "triple", "mesh4", "ring5"};
    const Model models[] = {Model::Kpn, Model::Ffp, Model::Lsfp, Model::Bittide};

    SimConfig bundled_config(const std::string &name) { return load_config(config_dir / (name + ".json")); }

    struct Outcome
    {
        bool pass = true;
        std::ostringstream detail;
        void fail(const std::string &why)
        {
            if (pass)
            {
                detail.str("");
            }
            else
            {
                detail << "; ";
            }
            pass = false;
            detail << why;
        }
    };

    bool within(double x, double target, double rel) { return std::abs(x - target) <= rel * std::abs(target); }

    std::string fmt(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return buf;
    }

    Outcome criterion1()
    {
        Outcome o;
        for (auto [name, expected] : {std::pair{"pair_m1", 3.0}, std::pair{"pair_m3", 1.0}})
        {
            const SimConfig c = bundled_config(name);
            const Trace t = run(c, Model::Ffp, SimTime::from_seconds(60.0));
            const SimTime from = steady_state_start(t);
            for (MachineId m = 0; m < t.meta.machines.size(); ++m)
            {
                const auto period = mean_firing_period(t, m, from);
                if (!period || !within(*period, expected, 0.01))
                {
                    o.fail(std::string(name) + " " + t.meta.machines[m] + " period " + (period ? fmt(*period) : "none"));
                }
            }
        }
        if (o.pass)
        {
            o.detail << "marking 1 -> 3.0 s, marking 3 -> 1.0 s";
        }
        return o;
    }

    Outcome criterion2()
    {
        Outcome o;
        std::size_t runs = 0;
        for (const char *name : bundled)
        {
            const SimConfig c = bundled_config(name);
            for (Model model : models)
            {
                double duration = 2000.0;
                Trace t;
                InvarianceReport rep;
                for (;;)
                {
                    t = run(c, model, SimTime::from_seconds(duration));
                    rep = invariance_report(t);
                    if (rep.firings >= 10000 || t.aborted())
                    {
                        break;
                    }
                    duration *= 2.0;
                }
                ++runs;
                const std::string tag = std::string(name) + "/" + to_string(model);
                if (t.aborted())
                {
                    o.fail(tag + " aborted: " + t.abort->reason);
                    continue;
                }
                for (const auto &v : rep.edges)
                {
                    const bool singleton = v.frame_lambdas.size() == 1 && v.state_lambdas == v.frame_lambdas;
                    if (!singleton || !v.ok())
                    {
                        o.fail(tag + " edge " + std::to_string(v.edge) + " not a singleton");
                    }
                    if (model == Model::Kpn && singleton)
                    {
                        const auto marking = c.topology.edges[v.edge].initial_marking.value_or(0);
                        if (*v.frame_lambdas.begin() != marking)
                        {
                            o.fail(tag + " edge " + std::to_string(v.edge) + " lambda differs from marking");
                        }
                    }
                }
            }
        }
        if (o.pass)
        {
            o.detail << runs << " runs, >= 10^4 firings each, one lambda per edge";
        }
        return o;
    }

    Outcome criterion3()
    {
        Outcome o;
        std::size_t compared = 0;
        for (const char *name : bundled)
        {
            const SimConfig c = bundled_config(name);
            double fastest = 0.0;
            for (const auto &m : c.topology.machines)
            {
                fastest = std::max(fastest, m.freq_hz);
            }
            const SimTime eps = SimTime::from_ns(period_of(fastest).ns / 10);
            for (Model model : models)
            {
                const SimTime d = SimTime::from_seconds(300.0);
                const Trace a = run(c, model, d, JitterSpec{1, eps});
                const Trace b = run(c, model, d, JitterSpec{2, eps});
                const std::string tag = std::string(name) + "/" + to_string(model);
                if (a.aborted() || b.aborted())
                {
                    o.fail(tag + " aborted");
                    continue;
                }
                const auto v = compare_traces(a, b);
                compared += v.compared_firings;
                if (!v.ok())
                {
                    o.fail(tag + " diverges at " + a.meta.machines[v.divergence->machine] + " firing " + std::to_string(v.divergence->firing));
                }
                if (v.compared_firings == 0)
                {
                    o.fail(tag + " compared nothing");
                }
            }
        }
        if (o.pass)
        {
            o.detail << "seeds 1 vs 2 identical on all configs and backends (" << compared << " firings)";
        }
        return o;
    }

    Outcome criterion4()
    {
        Outcome o;
        std::mt19937_64 rng(20240611);
        std::uniform_int_distribution<int> nodes(2, 6);
        std::uniform_real_distribution<double> delay(0.0, 5.0);
        std::uniform_real_distribution<double> freq(0.5, 4.0);
        std::uniform_int_distribution<int> marking(0, 3);
        std::uniform_int_distribution<int> headroom(1, 4);
        std::bernoulli_distribution present(0.5);
        std::bernoulli_distribution zero_delay(0.15);

        const int configs = 120;
        int positive_configs = 0;
        int reached_capacity = 0;
        std::string example;
        long long events = 0;
        for (int i = 0; i < configs; ++i)
        {
            SimConfig c;
            c.model = Model::Ffp;
            const int n = nodes(rng);
            const bool positive = i % 2 == 0; // half the configs keep every delay > 0
            for (int k = 0; k < n; ++k)
            {
                c.topology.machines.push_back({"m" + std::to_string(k), std::round(freq(rng) * 1000.0) / 1000.0, std::nullopt});
            }
            auto draw_delay = [&] {
                if (!positive && zero_delay(rng))
                {
                    return 0.0;
                }
                return std::max(0.001, std::round(delay(rng) * 1000.0) / 1000.0);
            };
            for (int a = 0; a < n; ++a)
            {
                for (int b = 0; b < n; ++b)
                {
                    if (a != b && present(rng))
                    {
                        EdgeSpec e;
                        e.src = c.topology.machines[a].name;
                        e.dst = c.topology.machines[b].name;
                        e.link_delay_s = draw_delay();
                        e.reverse_delay_s = draw_delay();
                        e.initial_marking = marking(rng);
                        e.capacity = *e.initial_marking + headroom(rng);
                        c.topology.edges.push_back(e);
                    }
                }
            }
            if (c.topology.edges.empty())
            {
                --i;
                continue;
            }
            positive_configs += positive;

            std::int64_t peak_gap = std::numeric_limits<std::int64_t>::max();
            bool unsound = false;
            bool over = false;
            RunOptions opts;
            opts.record_arrivals = false;
            opts.observer = [&](const Network &net, const Deadline &) {
                ++events;
                for (const auto &ch : net.channels)
                {
                    const std::int64_t real = real_occupancy(net, ch.id);
                    const std::int64_t est = estimate_occupancy(net, ch.id, net.now);
                    unsound |= est < real;
                    over |= real > ch.capacity;
                    peak_gap = std::min(peak_gap, ch.capacity - real);
                }
            };
            const Trace t = run(c, Model::Ffp, SimTime::from_seconds(60.0), std::nullopt, opts);
            if (unsound)
            {
                o.fail("config " + std::to_string(i) + ": estimate below real occupancy");
            }
            if (over || t.aborted())
            {
                o.fail("config " + std::to_string(i) + ": occupancy exceeded capacity");
            }
            if (positive && peak_gap <= 0)
            {
                ++reached_capacity;
                if (example.empty())
                {
                    example = "config " + std::to_string(i);
                }
            }
        }
        if (reached_capacity > 0)
        {
            o.fail("peak occupancy reached capacity in " + std::to_string(reached_capacity) + "/" + std::to_string(positive_configs) +
                   " positive-delay configs (first: " + example + ")");
        }
        if (o.pass)
        {
            o.detail << configs << " configs, " << events << " events: estimate >= real, peak < C";
        }
        else
        {
            o.detail << "; estimate >= real and occupancy <= C held at all " << events << " events";
        }
        return o;
    }

    Outcome criterion5()
    {
        Outcome o;
        const SimConfig c = bundled_config("mesh4");
        const double slowest = c.topology.machines[slowest_machine(c.topology)].freq_hz;
        double fastest = 0.0;
        for (const auto &m : c.topology.machines)
        {
            fastest = std::max(fastest, m.freq_hz);
        }
        const SimTime d = SimTime::from_seconds(600.0);

        const Trace ffp = run(c, Model::Ffp, d);
        for (MachineId m = 0; m < ffp.meta.machines.size(); ++m)
        {
            const double r = mean_firing_rate(ffp, m, steady_state_start(ffp), trace_end(ffp));
            if (!within(r, slowest, 0.02))
            {
                o.fail("ffp " + ffp.meta.machines[m] + " rate " + fmt(r));
            }
        }

        const Trace bt = run(c, Model::Bittide, d);
        if (bt.aborted())
        {
            o.fail("bittide aborted: " + bt.abort->reason);
            return o;
        }
        const SimTime from = steady_state_start(bt);
        if (from >= trace_end(bt))
        {
            o.fail("bittide never settled");
        }
        std::vector<double> omegas;
        for (MachineId m = 0; m < bt.meta.machines.size(); ++m)
        {
            omegas.push_back(mean_omega(bt, m, from));
        }
        const auto [lo, hi] = std::minmax_element(omegas.begin(), omegas.end());
        if (!(*lo > slowest && *hi < fastest))
        {
            o.fail("bittide frequencies outside (" + fmt(slowest) + ", " + fmt(fastest) + ")");
        }
        if ((*hi - *lo) > 0.01 * *lo)
        {
            o.fail("bittide frequencies spread " + fmt(*lo) + ".." + fmt(*hi));
        }
        const auto stutters = std::count_if(bt.records.begin(), bt.records.end(), [](const auto &r) { return r.kind == RecordKind::Stutter; });
        if (stutters != 0)
        {
            o.fail("bittide stuttered " + std::to_string(stutters) + " times");
        }
        if (o.pass)
        {
            o.detail << "ffp rates at " << fmt(slowest) << " Hz; bittide settles at " << fmt(*lo) << ".." << fmt(*hi) << " Hz from t=" << fmt(from.seconds())
                     << " s, no stutters";
        }
        return o;
    }

    Outcome criterion6()
    {
        Outcome o;
        const SimConfig c = bundled_config("mesh4");
        const SimTime d = SimTime::from_seconds(600.0);

        const Trace bt = run(c, Model::Bittide, d);
        if (bt.aborted())
        {
            o.fail("bittide aborted");
            return o;
        }
        const SimTime from = steady_state_start(bt);
        double worst_occ = 0.0;
        double worst_lat = 0.0;
        for (EdgeId e = 0; e < bt.meta.edges.size(); ++e)
        {
            const auto &te = bt.meta.edges[e];
            const double half = static_cast<double>(te.capacity) / 2.0;
            const double occ = occupancy_stats(bt, e, from).mean;
            worst_occ = std::max(worst_occ, std::abs(occ - half) / half);
            if (std::abs(occ - half) > 0.1 * half)
            {
                o.fail("bittide edge " + std::to_string(e) + " occupancy " + fmt(occ));
            }
            const double omega = mean_omega(bt, te.dst, from);
            const double predicted = te.link_delay.seconds() + half / omega;
            const double tau = channel_latency(bt, e, from).mean_s;
            worst_lat = std::max(worst_lat, std::abs(tau - predicted) * omega);
            if (std::abs(tau - predicted) > 1.0 / omega)
            {
                o.fail("bittide edge " + std::to_string(e) + " latency " + fmt(tau) + " vs " + fmt(predicted));
            }
        }

        const Trace ffp = run(c, Model::Ffp, d);
        const SimTime ffrom = steady_state_start(ffp);
        bool high = false;
        bool low = false;
        double tau_high = 0.0;
        double tau_low = 0.0;
        for (EdgeId e = 0; e < ffp.meta.edges.size(); ++e)
        {
            const auto &te = ffp.meta.edges[e];
            const double src_hz = ffp.meta.nominal_hz[te.src];
            const double dst_hz = ffp.meta.nominal_hz[te.dst];
            const auto occ = occupancy_stats(ffp, e, ffrom);
            const double cap = static_cast<double>(te.capacity);
            const double tau = channel_latency(ffp, e, ffrom).mean_s;
            const double omega = mean_omega(ffp, te.dst, ffrom);
            const double l = te.link_delay.seconds();
            // l <~ τ <~ l + C / ω_j, with one consumer period of slack for the approximation.
            if (tau < l || tau > l + (cap + 1.0) / omega)
            {
                o.fail("ffp edge " + std::to_string(e) + " latency " + fmt(tau) + " outside bracket");
            }
            if (src_hz > dst_hz && occ.mean > 0.7 * cap)
            {
                high = true;
                tau_high = std::max(tau_high, tau);
            }
            if (src_hz < dst_hz && occ.mean < 0.3 * cap)
            {
                low = true;
                tau_low = tau_low == 0.0 ? tau : std::min(tau_low, tau);
            }
        }
        if (!high)
        {
            o.fail("no fast->slow ffp edge above 0.7 C");
        }
        if (!low)
        {
            o.fail("no slow->fast ffp edge below 0.3 C");
        }
        if (high && low && !(tau_high > tau_low))
        {
            o.fail("full edges are not slower than empty ones");
        }
        if (o.pass)
        {
            o.detail << "bittide occupancy within " << fmt(100.0 * worst_occ) << "% of C/2, latency within " << fmt(worst_lat)
                     << " periods; ffp full-edge latency " << fmt(tau_high) << " s vs empty-edge " << fmt(tau_low) << " s";
        }
        return o;
    }

    Outcome criterion7()
    {
        Outcome o;
        const SimConfig c = bundled_config("ring5");
        const EdgeId edge = *c.topology.find_edge("E", "A");
        const SweepResult r = sweep_marking(c, edge, 1, 20, SimTime::from_seconds(400.0));
        if (r.rows.size() != 20)
        {
            o.fail("expected 20 rows");
            return o;
        }
        double best = 0.0;
        for (std::size_t i = 0; i < r.rows.size(); ++i)
        {
            best = std::max(best, r.rows[i].rate_pct);
            if (i > 0 && r.rows[i].rate_pct < r.rows[i - 1].rate_pct - 0.5)
            {
                o.fail("rate drops at marking " + std::to_string(r.rows[i].marking));
            }
        }
        std::size_t onset = r.rows.size();
        for (std::size_t i = 0; i < r.rows.size(); ++i)
        {
            if (r.rows[i].rate_pct >= best - 0.5)
            {
                onset = i;
                break;
            }
        }
        if (onset + 1 >= r.rows.size())
        {
            o.fail("no plateau before the end of the range");
        }
        for (std::size_t i = onset; i < r.rows.size(); ++i)
        {
            if (r.rows[i].rate_pct < best - 0.5)
            {
                o.fail("plateau not flat at marking " + std::to_string(r.rows[i].marking));
            }
        }
        const double base = r.rows[0].latency_s;
        for (std::size_t i = 0; i <= onset && i < r.rows.size(); ++i)
        {
            if (!within(r.rows[i].latency_s, base, 0.02))
            {
                o.fail("latency not flat at marking " + std::to_string(r.rows[i].marking));
            }
        }
        for (std::size_t i = onset + 1; i < r.rows.size(); ++i)
        {
            if (!(r.rows[i].latency_s > r.rows[i - 1].latency_s))
            {
                o.fail("latency not increasing at marking " + std::to_string(r.rows[i].marking));
            }
        }
        if (o.pass)
        {
            o.detail << "rate " << fmt(r.rows.front().rate_pct) << "% -> plateau " << fmt(best) << "% from marking " << r.rows[onset].marking
                     << "; latency flat then rising to " << fmt(r.rows.back().latency_pct) << "%";
        }
        return o;
    }

    Outcome criterion8()
    {
        Outcome o;
        std::mt19937_64 rng(8);
        std::size_t cycles = 0;
        for (int i = 0; i < 100; ++i)
        {
            const LsnGraph g = oracle::random_mixed_sign_lsn(rng, 8);
            const NormalizedGraph n = normalize_nonnegative(g);
            for (const auto &e : n.graph.edges)
            {
                if (e.lambda < 0)
                {
                    o.fail("graph " + std::to_string(i) + " keeps a negative edge");
                }
            }
            for (const auto &cyc : oracle::simple_cycles(g))
            {
                ++cycles;
                if (oracle::cycle_sum(g, cyc) != oracle::cycle_sum(n.graph, cyc))
                {
                    o.fail("graph " + std::to_string(i) + " changes a cycle sum");
                }
            }
        }
        if (o.pass)
        {
            o.detail << "100 graphs, " << cycles << " simple cycles preserved, all edges >= 0";
        }
        return o;
    }

    Outcome criterion9()
    {
        Outcome o;
        const SimConfig c = bundled_config("triple");
        const LsnGraph g = c.topology.to_lsn_graph();
        const std::int64_t horizon = 5;
        const ExtendedGraph ext = build_extended_graph(g, horizon);
        if (!check_acyclic(ext).acyclic())
        {
            o.fail("check_acyclic reports a cycle");
        }
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (const auto &e : ext.edges)
        {
            pairs.emplace_back(e.from, e.to);
        }
        if (oracle::has_cycle(ext.node_count(), pairs))
        {
            o.fail("DFS oracle finds a cycle");
        }

        std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> from_graph;
        for (const ExtEdge *e : ext.communication_edges())
        {
            const EventId a = ext.event_of(e->from);
            const EventId b = ext.event_of(e->to);
            const auto &le = g.edges.at(static_cast<std::size_t>(e->lsn_edge));
            if (b.count - a.count != le.lambda || a.machine != le.src || b.machine != le.dst)
            {
                o.fail("communication edge offset differs from lambda");
            }
            from_graph.insert({e->lsn_edge, a.count, b.count});
        }

        const Trace t = run(c, Model::Kpn, SimTime::from_seconds(60.0));
        std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> from_run;
        for (const auto &r : t.records)
        {
            if (r.kind != RecordKind::Fire)
            {
                continue;
            }
            const auto k = static_cast<std::int64_t>(r.theta_after) - 1;
            for (const auto &f : r.consumed)
            {
                if (f.seq >= 0 && f.seq < horizon && k < horizon)
                {
                    from_run.insert({f.edge, f.seq, k});
                }
            }
        }
        if (from_run != from_graph)
        {
            o.fail("run consumed " + std::to_string(from_run.size()) + " tokens in range, graph has " + std::to_string(from_graph.size()) +
                   " communication edges, sets differ");
        }
        if (o.pass)
        {
            o.detail << ext.node_count() << " nodes acyclic; " << from_graph.size() << " communication edges match KPN consumption";
        }
        return o;
    }
}

int main()
{
    using Fn = Outcome (*)();
    const Fn criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7, criterion8, criterion9};
    int failed = 0;
    for (std::size_t i = 0; i < std::size(criteria); ++i)
    {
        Outcome o;
        try
        {
            o = criteria[i]();
        }
        catch (const std::exception &e)
        {
            o.fail(std::string("exception: ") + e.what());
        }
        failed += !o.pass;
        std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail.str() << ")" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
