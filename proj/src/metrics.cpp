#include "lsn/metrics.hpp"

#include "lsn/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace lsn
{
    namespace
    {
        bool is_tick(const TraceRecord &r) { return r.kind != RecordKind::Arrival; }

        // Walks the records and integrates a piecewise-constant value over [from, end).
        template <class Value, class Pred>
        double time_average(const Trace &t, SimTime from, SimTime end, double initial, Pred applies, Value value)
        {
            if (end <= from)
            {
                return initial;
            }
            double current = initial;
            SimTime last = from;
            double acc = 0.0;
            for (const auto &r : t.records)
            {
                if (!applies(r))
                {
                    continue;
                }
                if (r.time >= end)
                {
                    break;
                }
                if (r.time > last)
                {
                    acc += current * static_cast<double>((std::min(r.time, end) - last).ns);
                    last = std::min(r.time, end);
                }
                current = value(r);
            }
            if (end > last)
            {
                acc += current * static_cast<double>((end - last).ns);
            }
            return acc / static_cast<double>((end - from).ns);
        }
    }

    SimTime trace_end(const Trace &t) { return t.abort ? t.abort->time : t.meta.duration; }

    RateSeries firing_rate(const Trace &t, MachineId machine, double window_s)
    {
        if (!(window_s > 0.0))
        {
            throw std::invalid_argument("rate window must be positive");
        }
        RateSeries s;
        s.machine = machine;
        s.window = SimTime::from_seconds(window_s);
        const SimTime end = trace_end(t);
        const auto n = static_cast<std::size_t>(end.ns / s.window.ns);
        std::vector<std::int64_t> counts(n, 0);
        for (const auto &r : t.records)
        {
            if (r.kind == RecordKind::Fire && r.machine == machine)
            {
                const auto k = static_cast<std::size_t>(r.time.ns / s.window.ns);
                if (k < n)
                {
                    ++counts[k];
                }
            }
        }
        for (std::size_t k = 0; k < n; ++k)
        {
            s.windows.push_back({SimTime::from_ns(static_cast<std::int64_t>(k) * s.window.ns), static_cast<double>(counts[k]) / window_s});
        }
        return s;
    }

    SimTime steady_state_start(const Trace &t)
    {
        const SimTime end = trace_end(t);
        SimTime start = SimTime::from_ns(end.ns / 5);
        // Per-tick ω moves in steps whenever an occupancy changes by one frame, so
        // convergence is judged on window means: 100 windows of at least 1 s.
        const SimTime window = std::max(SimTime::from_seconds(1.0), SimTime::from_ns(end.ns / 100));
        const auto n = static_cast<std::size_t>(end.ns / window.ns);
        if (n < 2)
        {
            return start;
        }
        for (MachineId m = 0; m < t.meta.machines.size(); ++m)
        {
            std::vector<double> means(n);
            for (std::size_t k = 0; k < n; ++k)
            {
                means[k] = mean_omega_between(t, m, SimTime::from_ns(static_cast<std::int64_t>(k) * window.ns),
                                              SimTime::from_ns(static_cast<std::int64_t>(k + 1) * window.ns));
            }
            const double final_omega = means.back();
            for (std::size_t k = n; k-- > 0;)
            {
                if (std::abs(means[k] - final_omega) > 0.005 * final_omega)
                {
                    start = std::max(start, SimTime::from_ns(static_cast<std::int64_t>(k + 1) * window.ns));
                    break;
                }
            }
        }
        return std::min(start, end);
    }

    double mean_firing_rate(const Trace &t, MachineId machine, SimTime from, SimTime to)
    {
        if (to <= from)
        {
            return 0.0;
        }
        std::int64_t fires = 0;
        for (const auto &r : t.records)
        {
            if (r.kind == RecordKind::Fire && r.machine == machine && r.time >= from && r.time < to)
            {
                ++fires;
            }
        }
        return static_cast<double>(fires) / (to - from).seconds();
    }

    std::optional<double> mean_firing_period(const Trace &t, MachineId machine, SimTime from)
    {
        std::optional<SimTime> first;
        SimTime last;
        std::int64_t count = 0;
        for (const auto &r : t.records)
        {
            if (r.kind == RecordKind::Fire && r.machine == machine && r.time >= from)
            {
                if (!first)
                {
                    first = r.time;
                }
                last = r.time;
                ++count;
            }
        }
        if (count < 2)
        {
            return std::nullopt;
        }
        return (last - *first).seconds() / static_cast<double>(count - 1);
    }

    OccupancyStats occupancy_stats(const Trace &t, EdgeId edge, SimTime from)
    {
        OccupancyStats s;
        s.edge = edge;
        s.capacity = t.meta.edges.at(edge).capacity;
        const SimTime end = trace_end(t);
        std::optional<std::int64_t> at_from;
        bool any = false;
        for (const auto &r : t.records)
        {
            const std::int64_t b = r.beta.at(edge);
            if (r.time <= from)
            {
                at_from = b;
                continue;
            }
            if (r.time >= end)
            {
                break;
            }
            s.min = any ? std::min(s.min, b) : b;
            s.max = any ? std::max(s.max, b) : b;
            any = true;
        }
        if (at_from)
        {
            s.min = any ? std::min(s.min, *at_from) : *at_from;
            s.max = any ? std::max(s.max, *at_from) : *at_from;
        }
        const double initial = at_from ? static_cast<double>(*at_from) : (t.records.empty() ? 0.0 : static_cast<double>(t.records.front().beta.at(edge)));
        s.mean = time_average(
            t, from, end, initial, [&](const TraceRecord &r) { return r.time > from; }, [&](const TraceRecord &r) { return static_cast<double>(r.beta.at(edge)); });
        return s;
    }

    double mean_omega_between(const Trace &t, MachineId machine, SimTime from, SimTime to)
    {
        double initial = t.meta.nominal_hz.at(machine);
        for (const auto &r : t.records)
        {
            if (r.time > from)
            {
                break;
            }
            if (is_tick(r) && r.machine == machine)
            {
                initial = r.omega;
            }
        }
        return time_average(
            t, from, to, initial, [&](const TraceRecord &r) { return r.time > from && is_tick(r) && r.machine == machine; },
            [](const TraceRecord &r) { return r.omega; });
    }

    double mean_omega(const Trace &t, MachineId machine, SimTime from) { return mean_omega_between(t, machine, from, trace_end(t)); }

    LatencyRecord channel_latency(const Trace &t, EdgeId edge, SimTime from)
    {
        LatencyRecord out;
        out.edge = edge;
        const auto &te = t.meta.edges.at(edge);
        std::unordered_map<std::int64_t, SimTime> emitted;
        for (const auto &r : t.records)
        {
            if (r.kind != RecordKind::Fire)
            {
                continue;
            }
            if (r.machine == te.src)
            {
                for (const auto &f : r.produced)
                {
                    if (f.edge == edge && r.emitted >= from)
                    {
                        emitted.emplace(f.seq, r.emitted);
                    }
                }
            }
            if (r.machine == te.dst)
            {
                for (const auto &f : r.consumed)
                {
                    if (f.edge != edge)
                    {
                        continue;
                    }
                    auto it = emitted.find(f.seq);
                    if (it != emitted.end())
                    {
                        out.seqs.push_back(f.seq);
                        out.tau_s.push_back((r.time - it->second).seconds());
                        emitted.erase(it);
                    }
                }
            }
        }
        if (!out.tau_s.empty())
        {
            auto [lo, hi] = std::minmax_element(out.tau_s.begin(), out.tau_s.end());
            out.min_s = *lo;
            out.max_s = *hi;
            double sum = 0.0;
            for (double v : out.tau_s)
            {
                sum += v;
            }
            out.mean_s = sum / static_cast<double>(out.tau_s.size());
        }
        const double omega = mean_omega(t, te.dst, from);
        out.consumer_period_s = omega > 0.0 ? 1.0 / omega : 0.0;
        out.predicted_s = te.link_delay.seconds() + occupancy_stats(t, edge, from).mean * out.consumer_period_s;
        return out;
    }

    bool InvarianceVerdict::ok() const noexcept
    {
        const auto only_expected = [&](const std::set<std::int64_t> &s) { return s.empty() || (s.size() == 1 && *s.begin() == expected); };
        return only_expected(frame_lambdas) && only_expected(state_lambdas);
    }

    bool InvarianceReport::ok() const noexcept
    {
        return std::all_of(edges.begin(), edges.end(), [](const auto &v) { return v.ok(); });
    }

    InvarianceReport invariance_report(const Trace &t)
    {
        InvarianceReport rep;
        const std::size_t ne = t.meta.edges.size();
        for (std::size_t e = 0; e < ne; ++e)
        {
            InvarianceVerdict v;
            v.edge = static_cast<EdgeId>(e);
            v.expected = t.meta.edges[e].lambda;
            rep.edges.push_back(std::move(v));
        }
        if (t.records.empty())
        {
            rep.warnings.emplace_back("empty trace: invariance holds vacuously");
            return rep;
        }
        std::vector<std::int64_t> theta(t.meta.machines.size(), 0);
        for (const auto &r : t.records)
        {
            if (r.kind == RecordKind::Fire)
            {
                ++rep.firings;
                const auto k = static_cast<std::int64_t>(r.theta_after) - 1;
                for (const auto &f : r.consumed)
                {
                    rep.edges[f.edge].frame_lambdas.insert(k - f.seq);
                }
            }
            if (is_tick(r))
            {
                theta[r.machine] = static_cast<std::int64_t>(r.theta_after);
            }
            for (std::size_t e = 0; e < ne; ++e)
            {
                const auto &te = t.meta.edges[e];
                rep.edges[e].state_lambdas.insert(r.beta[e] + r.gamma[e] + theta[te.dst] - theta[te.src]);
            }
        }
        for (const auto &v : rep.edges)
        {
            if (v.frame_lambdas.empty())
            {
                rep.warnings.push_back("edge " + std::to_string(v.edge) + ": no frames consumed");
            }
        }
        return rep;
    }

    MachineId slowest_machine(const Topology &t)
    {
        if (t.machines.empty())
        {
            throw ConfigError("topology has no machines");
        }
        MachineId best = 0;
        for (MachineId m = 1; m < t.machines.size(); ++m)
        {
            if (t.machines[m].freq_hz < t.machines[best].freq_hz)
            {
                best = m;
            }
        }
        return best;
    }

    SweepResult sweep_marking(const SimConfig &config, EdgeId edge, std::int64_t lo, std::int64_t hi, SimTime duration,
                              std::optional<MachineId> designated)
    {
        if (config.model != Model::Ffp && config.model != Model::Lsfp)
        {
            throw ConfigError("marking sweeps need the ffp or lsfp model");
        }
        if (lo < 0 || hi < lo)
        {
            throw ConfigError("sweep range must be non-negative and non-empty");
        }
        if (edge >= config.topology.edges.size())
        {
            throw ConfigError("swept edge " + std::to_string(edge) + " does not exist");
        }
        SweepResult res;
        res.edge = edge;
        res.designated = designated.value_or(slowest_machine(config.topology));
        if (res.designated >= config.topology.machines.size())
        {
            throw ConfigError("designated machine does not exist");
        }
        const double nominal = config.topology.machines[res.designated].freq_hz;
        const auto count = static_cast<std::size_t>(hi - lo + 1);
        res.rows.resize(count);

        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(count);
        auto worker = [&] {
            for (std::size_t i = next++; i < count; i = next++)
            {
                try
                {
                    SimConfig c = config;
                    c.marking_overrides[edge] = lo + static_cast<std::int64_t>(i);
                    const Trace tr = run(c, c.model, duration, std::nullopt, {});
                    const SimTime from = steady_state_start(tr);
                    SweepRow &row = res.rows[i];
                    row.marking = lo + static_cast<std::int64_t>(i);
                    row.aborted = tr.aborted();
                    row.rate_hz = mean_firing_rate(tr, res.designated, from, trace_end(tr));
                    row.rate_pct = 100.0 * row.rate_hz / nominal;
                    row.latency_s = channel_latency(tr, edge, from).mean_s;
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            }
        };
        const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, count);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
        {
            pool.emplace_back(worker);
        }
        for (auto &th : pool)
        {
            th.join();
        }
        for (auto &e : errors)
        {
            if (e)
            {
                std::rethrow_exception(e);
            }
        }
        double min_latency = 0.0;
        bool have = false;
        for (const auto &row : res.rows)
        {
            if (row.latency_s > 0.0 && (!have || row.latency_s < min_latency))
            {
                min_latency = row.latency_s;
                have = true;
            }
        }
        for (auto &row : res.rows)
        {
            row.latency_pct = have ? 100.0 * row.latency_s / min_latency : 0.0;
        }
        return res;
    }

    nlohmann::json summary_json(const Trace &t)
    {
        using nlohmann::json;
        const SimTime from = steady_state_start(t);
        const SimTime end = trace_end(t);
        json j;
        j["backend"] = to_string(t.meta.backend);
        j["config_hash"] = t.meta.config_hash;
        j["topology_hash"] = t.meta.topology_hash;
        j["seed"] = t.meta.seed ? json(*t.meta.seed) : json(nullptr);
        j["duration_s"] = t.meta.duration.seconds();
        j["steady_state_from_s"] = from.seconds();
        json machines = json::array();
        for (MachineId m = 0; m < t.meta.machines.size(); ++m)
        {
            std::int64_t fires = 0;
            std::int64_t stutters = 0;
            for (const auto &r : t.records)
            {
                if (r.machine == m)
                {
                    fires += r.kind == RecordKind::Fire;
                    stutters += r.kind == RecordKind::Stutter;
                }
            }
            const auto period = mean_firing_period(t, m, from);
            machines.push_back({{"name", t.meta.machines[m]},
                                {"nominal_hz", t.meta.nominal_hz[m]},
                                {"fires", fires},
                                {"stutters", stutters},
                                {"steady_rate_hz", mean_firing_rate(t, m, from, end)},
                                {"steady_period_s", period ? json(*period) : json(nullptr)},
                                {"mean_omega_hz", mean_omega(t, m, from)}});
        }
        j["machines"] = machines;
        const InvarianceReport inv = invariance_report(t);
        json edges = json::array();
        for (EdgeId e = 0; e < t.meta.edges.size(); ++e)
        {
            const auto &te = t.meta.edges[e];
            const auto occ = occupancy_stats(t, e, from);
            const auto lat = channel_latency(t, e, from);
            edges.push_back({{"src", t.meta.machines[te.src]},
                             {"dst", t.meta.machines[te.dst]},
                             {"lambda", te.lambda},
                             {"capacity", te.capacity},
                             {"occupancy_mean", occ.mean},
                             {"occupancy_min", occ.min},
                             {"occupancy_max", occ.max},
                             {"latency_mean_s", lat.mean_s},
                             {"latency_min_s", lat.min_s},
                             {"latency_max_s", lat.max_s},
                             {"latency_predicted_s", lat.predicted_s},
                             {"frames_matched", lat.tau_s.size()},
                             {"lambda_ok", inv.edges[e].ok()}});
        }
        j["edges"] = edges;
        j["invariance_ok"] = inv.ok();
        j["warnings"] = inv.warnings;
        if (t.abort)
        {
            j["abort"] = {{"reason", t.abort->reason},
                          {"time_s", t.abort->time.seconds()},
                          {"machine", t.meta.machines.at(t.abort->machine)},
                          {"edge", t.abort->edge},
                          {"occupancy", t.abort->occupancy},
                          {"detail", t.abort->detail}};
        }
        return j;
    }

    void write_sweep_csv(std::ostream &os, const SweepResult &r)
    {
        os << "marking,rate_hz,rate_pct,latency_s,latency_pct,aborted\n";
        for (const auto &row : r.rows)
        {
            os << row.marking << ',' << row.rate_hz << ',' << row.rate_pct << ',' << row.latency_s << ',' << row.latency_pct << ','
               << (row.aborted ? 1 : 0) << '\n';
        }
    }

    void write_rate_csv(std::ostream &os, const Trace &t, double window_s)
    {
        os << "machine,window_start_s,rate_hz\n";
        for (MachineId m = 0; m < t.meta.machines.size(); ++m)
        {
            for (const auto &w : firing_rate(t, m, window_s).windows)
            {
                os << t.meta.machines[m] << ',' << w.start.seconds() << ',' << w.rate_hz << '\n';
            }
        }
    }

    void write_plot_data(std::ostream &os, const std::vector<PlotSeries> &series)
    {
        bool first = true;
        for (const auto &s : series)
        {
            if (!first)
            {
                os << "\n\n";
            }
            first = false;
            os << "# " << s.name << '\n';
            for (auto [x, y] : s.points)
            {
                os << x << ' ' << y << '\n';
            }
        }
    }

    std::vector<PlotSeries> rate_series(const Trace &t, double window_s)
    {
        std::vector<PlotSeries> out;
        for (MachineId m = 0; m < t.meta.machines.size(); ++m)
        {
            PlotSeries s{t.meta.machines[m], {}};
            for (const auto &w : firing_rate(t, m, window_s).windows)
            {
                s.points.emplace_back(w.start.seconds(), w.rate_hz);
            }
            out.push_back(std::move(s));
        }
        return out;
    }

    std::vector<PlotSeries> occupancy_series(const Trace &t)
    {
        std::vector<PlotSeries> out;
        for (EdgeId e = 0; e < t.meta.edges.size(); ++e)
        {
            const auto &te = t.meta.edges[e];
            PlotSeries s{t.meta.machines[te.src] + "->" + t.meta.machines[te.dst], {}};
            std::optional<std::int64_t> last;
            for (const auto &r : t.records)
            {
                if (!last || *last != r.beta[e])
                {
                    s.points.emplace_back(r.time.seconds(), static_cast<double>(r.beta[e]));
                    last = r.beta[e];
                }
            }
            out.push_back(std::move(s));
        }
        return out;
    }

    std::vector<PlotSeries> sweep_series(const SweepResult &r)
    {
        PlotSeries rate{"rate_pct", {}};
        PlotSeries lat{"latency_pct", {}};
        for (const auto &row : r.rows)
        {
            rate.points.emplace_back(static_cast<double>(row.marking), row.rate_pct);
            lat.points.emplace_back(static_cast<double>(row.marking), row.latency_pct);
        }
        return {rate, lat};
    }
}
