#include "lsn/cli.hpp"

#include "lsn/extended_graph.hpp"
#include "lsn/graph.hpp"
#include "lsn/kpn.hpp"
#include "lsn/metrics.hpp"
#include "lsn/simulate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace lsn::cli
{
    namespace
    {
        struct RunFlags
        {
            std::string config;
            std::string model;
            std::optional<double> duration;
            std::optional<std::uint64_t> seed;
            std::optional<double> jitter_eps;
            std::string controller;
            std::optional<double> kp;
            std::optional<double> ki;
            std::optional<double> clamp_pct;
            std::string output_dir = "out";
            bool plot_data = false;
            bool no_timestamp = false;
        };

        void add_run_flags(CLI::App *cmd, RunFlags &f)
        {
            cmd->add_option("--config", f.config, "topology/config JSON file")->required();
            cmd->add_option("--model", f.model, "kpn|ffp|lsfp|bittide (default: from config)");
            cmd->add_option("--duration", f.duration, "simulated seconds");
            cmd->add_option("--seed", f.seed, "jitter seed");
            cmd->add_option("--jitter-eps", f.jitter_eps, "jitter magnitude in seconds");
            cmd->add_option("--controller", f.controller, "bittide controller: p|pi");
            cmd->add_option("--kp", f.kp, "proportional gain");
            cmd->add_option("--ki", f.ki, "integral gain");
            cmd->add_option("--clamp-pct", f.clamp_pct, "frequency correction bound in percent");
            cmd->add_option("--output-dir", f.output_dir, "where output files go");
            cmd->add_flag("--plot-data", f.plot_data, "also write x/y series files");
            cmd->add_flag("--no-timestamp", f.no_timestamp, "omit wall-clock time from metadata");
        }

        SimConfig resolve(const RunFlags &f)
        {
            SimConfig c = load_config(f.config);
            if (!f.model.empty())
            {
                c.model = parse_model(f.model);
            }
            if (f.duration)
            {
                if (!(*f.duration > 0.0))
                {
                    throw ConfigError("--duration must be positive");
                }
                c.duration_s = *f.duration;
            }
            if (f.seed || f.jitter_eps)
            {
                JitterSpec j = c.jitter.value_or(JitterSpec{});
                if (f.seed)
                {
                    j.seed = *f.seed;
                }
                if (f.jitter_eps)
                {
                    if (*f.jitter_eps < 0.0)
                    {
                        throw ConfigError("--jitter-eps must be non-negative");
                    }
                    j.magnitude = SimTime::from_seconds(*f.jitter_eps);
                }
                c.jitter = j;
            }
            if (!f.controller.empty())
            {
                if (f.controller == "p")
                {
                    c.controller.kind = ControlKind::Proportional;
                }
                else if (f.controller == "pi")
                {
                    c.controller.kind = ControlKind::ProportionalIntegral;
                }
                else
                {
                    throw ConfigError("--controller must be p or pi");
                }
            }
            if (f.kp)
            {
                c.controller.kp = *f.kp;
            }
            if (f.ki)
            {
                c.controller.ki = *f.ki;
            }
            if (f.clamp_pct)
            {
                c.controller.clamp_pct = *f.clamp_pct;
            }
            validate_runtime_config(c);
            return c;
        }

        std::ofstream open_out(const fs::path &p)
        {
            std::ofstream os(p, std::ios::binary);
            if (!os)
            {
                throw ConfigError("cannot write " + p.string());
            }
            return os;
        }

        void print_abort(std::ostream &err, const Trace &t)
        {
            const auto &a = *t.abort;
            err << "abort: " << a.reason << " at t=" << a.time.seconds() << " s on " << t.meta.machines.at(a.machine) << ": " << a.detail
                << '\n';
        }

        std::string now_iso()
        {
            const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            std::tm tm{};
            gmtime_r(&now, &tm);
            std::ostringstream os;
            os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
            return os.str();
        }

        int cmd_simulate(const RunFlags &f, std::ostream &out, std::ostream &err)
        {
            const SimConfig c = resolve(f);
            const Trace t = run(c);
            fs::create_directories(f.output_dir);
            const fs::path dir = f.output_dir;
            {
                auto os = open_out(dir / "trace.csv");
                write_csv(os, t, !f.no_timestamp);
            }
            {
                auto os = open_out(dir / "summary.json");
                auto j = summary_json(t);
                if (!f.no_timestamp)
                {
                    j["created"] = now_iso();
                }
                os << j.dump(2) << '\n';
            }
            {
                auto os = open_out(dir / "rates.csv");
                write_rate_csv(os, t, 10.0);
            }
            if (f.plot_data)
            {
                auto rates = open_out(dir / "plot_rates.dat");
                write_plot_data(rates, rate_series(t, 10.0));
                auto occ = open_out(dir / "plot_occupancy.dat");
                write_plot_data(occ, occupancy_series(t));
            }
            const SimTime from = steady_state_start(t);
            for (MachineId m = 0; m < t.meta.machines.size(); ++m)
            {
                out << t.meta.machines[m] << ": steady rate " << mean_firing_rate(t, m, from, trace_end(t)) << " Hz\n";
            }
            if (t.aborted())
            {
                print_abort(err, t);
                return RuntimeAbort;
            }
            return Ok;
        }

        int cmd_check(const RunFlags &f, std::ostream &out, std::ostream &err)
        {
            SimConfig c = resolve(f);
            const std::uint64_t seed = f.seed.value_or(1);
            double shortest = 0.0;
            for (const auto &m : c.topology.machines)
            {
                shortest = std::max(shortest, m.freq_hz);
            }
            const SimTime eps = f.jitter_eps ? SimTime::from_seconds(*f.jitter_eps) : SimTime::from_ns(period_of(shortest).ns / 10);
            const SimTime duration = SimTime::from_seconds(c.duration_s);
            const Trace a = run(c, c.model, duration, JitterSpec{seed, eps});
            const Trace b = run(c, c.model, duration, JitterSpec{seed + 1, eps});
            for (const Trace *t : {&a, &b})
            {
                if (t->aborted())
                {
                    print_abort(err, *t);
                    return RuntimeAbort;
                }
            }
            int code = Ok;
            const DeterminacyVerdict d = compare_traces(a, b);
            if (d.ok())
            {
                out << "determinacy: OK (" << d.compared_firings << " firings compared)\n";
            }
            else
            {
                const auto &div = *d.divergence;
                out << "determinacy: FAIL\n";
                err << "first divergence: machine " << a.meta.machines.at(div.machine) << " firing " << div.firing << '\n';
                code = CheckFailure;
            }
            for (const auto &[label, t] : {std::pair{"seed " + std::to_string(seed), &a}, std::pair{"seed " + std::to_string(seed + 1), &b}})
            {
                const InvarianceReport rep = invariance_report(*t);
                for (const auto &w : rep.warnings)
                {
                    err << "warning: " << w << '\n';
                }
                out << "invariance (" << label << "): " << (rep.ok() ? "OK" : "FAIL") << '\n';
                for (const auto &v : rep.edges)
                {
                    if (!v.ok())
                    {
                        const auto &te = t->meta.edges[v.edge];
                        err << "  edge " << t->meta.machines[te.src] << "->" << t->meta.machines[te.dst] << ": expected " << v.expected
                            << ", frame lambdas {";
                        for (auto x : v.frame_lambdas)
                        {
                            err << ' ' << x;
                        }
                        err << " } state lambdas {";
                        for (auto x : v.state_lambdas)
                        {
                            err << ' ' << x;
                        }
                        err << " }\n";
                        code = CheckFailure;
                    }
                }
            }
            return code;
        }

        EdgeId parse_edge(const Topology &t, const std::string &s)
        {
            const auto arrow = s.find("->");
            if (arrow != std::string::npos)
            {
                const auto e = t.find_edge(s.substr(0, arrow), s.substr(arrow + 2));
                if (!e)
                {
                    throw ConfigError("no edge " + s);
                }
                return *e;
            }
            try
            {
                std::size_t used = 0;
                const auto idx = std::stoul(s, &used);
                if (used == s.size() && idx < t.edges.size())
                {
                    return static_cast<EdgeId>(idx);
                }
            }
            catch (const std::exception &)
            {
            }
            throw ConfigError("no edge " + s);
        }

        std::pair<std::int64_t, std::int64_t> parse_range(const std::string &s)
        {
            const auto dots = s.find("..");
            try
            {
                if (dots == std::string::npos)
                {
                    const auto v = std::stoll(s);
                    return {v, v};
                }
                return {std::stoll(s.substr(0, dots)), std::stoll(s.substr(dots + 2))};
            }
            catch (const std::exception &)
            {
                throw ConfigError("range must look like LO..HI");
            }
        }

        struct SweepFlags
        {
            RunFlags run;
            std::string edge;
            std::string range = "1..20";
            std::string designated;
        };

        int cmd_sweep(const SweepFlags &f, std::ostream &out, std::ostream &)
        {
            const SimConfig c = resolve(f.run);
            const EdgeId e = parse_edge(c.topology, f.edge);
            const auto [lo, hi] = parse_range(f.range);
            std::optional<MachineId> designated;
            if (!f.designated.empty())
            {
                designated = c.topology.machine_index(f.designated);
            }
            const SweepResult r = sweep_marking(c, e, lo, hi, SimTime::from_seconds(c.duration_s), designated);
            fs::create_directories(f.run.output_dir);
            {
                auto os = open_out(fs::path(f.run.output_dir) / "sweep.csv");
                write_sweep_csv(os, r);
            }
            if (f.run.plot_data)
            {
                auto os = open_out(fs::path(f.run.output_dir) / "plot_sweep.dat");
                write_plot_data(os, sweep_series(r));
            }
            write_sweep_csv(out, r);
            return Ok;
        }

        struct AnalyzeFlags
        {
            std::string config;
            std::string normalize;
            std::optional<std::int64_t> horizon;
            std::string graph_out;
        };

        int cmd_analyze(const AnalyzeFlags &f, std::ostream &out, std::ostream &err)
        {
            const SimConfig c = load_config(f.config);
            const LsnGraph g = c.topology.to_lsn_graph();
            const ValidationReport rep = validate_lsn(g);
            if (!rep.ok())
            {
                out << "invalid LSN: " << rep.violations.size() << " violation(s)" << (rep.truncated ? " (list truncated)" : "") << '\n';
                for (const auto &v : rep.violations)
                {
                    err << to_string(v.kind) << ": " << v.detail << " [";
                    for (std::size_t k = 0; k < v.witness.size(); ++k)
                    {
                        err << (k ? " " : "") << g.names[v.witness[k]];
                    }
                    err << "]\n";
                }
                return CheckFailure;
            }
            out << "valid LSN: " << g.size() << " machines, " << g.edges.size() << " edges\n";
            if (!f.normalize.empty())
            {
                const NormalizedGraph n = normalize_nonnegative(g);
                Topology t = c.topology;
                for (std::size_t e = 0; e < t.edges.size(); ++e)
                {
                    t.edges[e].lambda = n.graph.edges[e].lambda;
                }
                auto os = open_out(f.normalize);
                os << to_json(t).dump(2) << '\n';
                out << "normalized topology written to " << f.normalize << '\n';
            }
            if (f.horizon)
            {
                if (*f.horizon < 1)
                {
                    throw ConfigError("--extended-graph needs a horizon >= 1");
                }
                const ExtendedGraph ext = build_extended_graph(g, *f.horizon);
                if (f.graph_out.empty())
                {
                    write_dot(out, ext, g);
                }
                else
                {
                    auto os = open_out(f.graph_out);
                    write_dot(os, ext, g);
                }
            }
            return Ok;
        }
    }

    int main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"Logical synchrony network simulator", args.empty() ? "lsnsim" : args.front()};
        app.require_subcommand(1);

        RunFlags sim;
        auto *simulate = app.add_subcommand("simulate", "run one backend and write trace and summaries");
        add_run_flags(simulate, sim);

        RunFlags chk;
        auto *check = app.add_subcommand("check", "determinacy and logical-delay invariance over two jittered runs");
        add_run_flags(check, chk);

        SweepFlags sw;
        auto *sweep = app.add_subcommand("sweep", "sweep the initial marking of one edge");
        add_run_flags(sweep, sw.run);
        sweep->add_option("--edge", sw.edge, "edge as SRC->DST or index")->required();
        sweep->add_option("--range", sw.range, "markings LO..HI");
        sweep->add_option("--designated", sw.designated, "machine whose rate is reported (default: slowest)");

        AnalyzeFlags an;
        auto *analyze = app.add_subcommand("analyze", "validate a topology, normalize it, export its extended graph");
        analyze->add_option("--config", an.config, "topology JSON file")->required();
        analyze->add_option("--normalize", an.normalize, "write a non-negative topology here");
        analyze->add_option("--extended-graph", an.horizon, "export G_ext over this many events per machine");
        analyze->add_option("--graph-out", an.graph_out, "file for --extended-graph (default: stdout)");

        std::vector<std::string> rest(args.rbegin(), args.rend());
        if (!rest.empty())
        {
            rest.pop_back();
        }
        try
        {
            app.parse(rest);
        }
        catch (const CLI::ParseError &e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? Ok : ConfigFailure;
        }

        try
        {
            if (*simulate)
            {
                return cmd_simulate(sim, out, err);
            }
            if (*check)
            {
                return cmd_check(chk, out, err);
            }
            if (*sweep)
            {
                return cmd_sweep(sw, out, err);
            }
            return cmd_analyze(an, out, err);
        }
        catch (const ConfigError &e)
        {
            err << "config error: " << e.what() << '\n';
            return ConfigFailure;
        }
        catch (const GraphError &e)
        {
            err << "graph error: " << e.what() << '\n';
            return CheckFailure;
        }
        catch (const nlohmann::json::exception &e)
        {
            err << "config error: " << e.what() << '\n';
            return ConfigFailure;
        }
        catch (const fs::filesystem_error &e)
        {
            err << "config error: " << e.what() << '\n';
            return ConfigFailure;
        }
    }
}
