#include "lsn/extended_graph.hpp"
#include "lsn/ffp.hpp"
#include "lsn/graph.hpp"
#include "lsn/metrics.hpp"
#include "lsn/simulate.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>

namespace py = pybind11;
using nlohmann::json;

namespace
{
    // dicts travel as JSON text; small payloads, keeps one conversion path
    json from_py(const py::object &o)
    {
        return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
    }

    py::object to_py(const json &j) { return py::module_::import("json").attr("loads")(j.dump()); }

    lsn::SimConfig config_of(const py::object &o)
    {
        if (py::isinstance<py::str>(o))
        {
            return lsn::load_config(o.cast<std::string>());
        }
        if (py::hasattr(o, "__fspath__"))
        {
            return lsn::load_config(py::str(o.attr("__fspath__")()).cast<std::string>());
        }
        return lsn::parse_config(from_py(o));
    }

    py::dict abort_dict(const lsn::Trace &t)
    {
        py::dict d;
        const auto &a = *t.abort;
        d["reason"] = a.reason;
        d["time_s"] = a.time.seconds();
        d["machine"] = t.meta.machines.at(a.machine);
        d["edge"] = a.edge;
        d["occupancy"] = a.occupancy;
        d["detail"] = a.detail;
        return d;
    }

    lsn::Trace simulate(const py::object &config, std::optional<std::string> model, std::optional<double> duration,
                        std::optional<std::uint64_t> seed, std::optional<double> jitter_eps)
    {
        lsn::SimConfig c = config_of(config);
        if (model)
        {
            c.model = lsn::parse_model(*model);
        }
        if (duration)
        {
            c.duration_s = *duration;
        }
        if (seed || jitter_eps)
        {
            lsn::JitterSpec j = c.jitter.value_or(lsn::JitterSpec{});
            if (seed)
            {
                j.seed = *seed;
            }
            if (jitter_eps)
            {
                j.magnitude = lsn::SimTime::from_seconds(*jitter_eps);
            }
            c.jitter = j;
        }
        lsn::validate_runtime_config(c);
        py::gil_scoped_release release;
        return lsn::run(c);
    }

    py::dict compare(const lsn::Trace &a, const lsn::Trace &b)
    {
        const auto v = lsn::compare_traces(a, b);
        py::dict d;
        d["ok"] = v.ok();
        d["compared_firings"] = v.compared_firings;
        if (v.divergence)
        {
            py::dict div;
            div["machine"] = a.meta.machines.at(v.divergence->machine);
            div["firing"] = v.divergence->firing;
            div["left"] = v.divergence->left;
            div["right"] = v.divergence->right;
            d["divergence"] = div;
        }
        else
        {
            d["divergence"] = py::none();
        }
        return d;
    }

    py::dict invariance(const lsn::Trace &t)
    {
        const auto rep = lsn::invariance_report(t);
        py::list edges;
        for (const auto &v : rep.edges)
        {
            py::dict e;
            e["edge"] = v.edge;
            e["expected"] = v.expected;
            e["frame_lambdas"] = std::vector<std::int64_t>(v.frame_lambdas.begin(), v.frame_lambdas.end());
            e["state_lambdas"] = std::vector<std::int64_t>(v.state_lambdas.begin(), v.state_lambdas.end());
            e["ok"] = v.ok();
            edges.append(e);
        }
        py::dict d;
        d["ok"] = rep.ok();
        d["firings"] = rep.firings;
        d["edges"] = edges;
        d["warnings"] = rep.warnings;
        return d;
    }

    py::dict validate(const py::object &config)
    {
        const auto c = config_of(config);
        const auto g = c.topology.to_lsn_graph();
        const auto rep = lsn::validate_lsn(g);
        py::list vs;
        for (const auto &v : rep.violations)
        {
            py::dict d;
            d["kind"] = lsn::to_string(v.kind);
            d["detail"] = v.detail;
            std::vector<std::string> names;
            for (auto m : v.witness)
            {
                names.push_back(g.names[m]);
            }
            d["witness"] = names;
            vs.append(d);
        }
        py::dict d;
        d["ok"] = rep.ok();
        d["truncated"] = rep.truncated;
        d["violations"] = vs;
        return d;
    }

    py::object normalize(const py::object &config)
    {
        const auto c = config_of(config);
        const auto n = lsn::normalize_nonnegative(c.topology.to_lsn_graph());
        lsn::Topology t = c.topology;
        for (std::size_t e = 0; e < t.edges.size(); ++e)
        {
            t.edges[e].lambda = n.graph.edges[e].lambda;
        }
        return to_py(lsn::to_json(t));
    }

    std::string extended_graph_dot(const py::object &config, std::int64_t horizon)
    {
        const auto g = config_of(config).topology.to_lsn_graph();
        const auto ext = lsn::build_extended_graph(g, horizon);
        std::ostringstream os;
        lsn::write_dot(os, ext, g);
        return os.str();
    }

    lsn::EdgeId edge_of(const lsn::SimConfig &c, const py::object &edge)
    {
        if (py::isinstance<py::int_>(edge))
        {
            return edge.cast<lsn::EdgeId>();
        }
        const auto s = edge.cast<std::string>();
        const auto arrow = s.find("->");
        if (arrow == std::string::npos)
        {
            throw lsn::ConfigError("edge must be SRC->DST or an index");
        }
        const auto e = c.topology.find_edge(s.substr(0, arrow), s.substr(arrow + 2));
        if (!e)
        {
            throw lsn::ConfigError("no edge " + s);
        }
        return *e;
    }

    py::list sweep(const py::object &config, const py::object &edge, std::int64_t lo, std::int64_t hi, std::optional<double> duration,
                   std::optional<std::string> designated)
    {
        const auto c = config_of(config);
        const auto e = edge_of(c, edge);
        std::optional<lsn::MachineId> d;
        if (designated)
        {
            d = c.topology.machine_index(*designated);
        }
        lsn::SweepResult r;
        {
            py::gil_scoped_release release;
            r = lsn::sweep_marking(c, e, lo, hi, lsn::SimTime::from_seconds(duration.value_or(c.duration_s)), d);
        }
        py::list rows;
        for (const auto &row : r.rows)
        {
            py::dict x;
            x["marking"] = row.marking;
            x["rate_hz"] = row.rate_hz;
            x["rate_pct"] = row.rate_pct;
            x["latency_s"] = row.latency_s;
            x["latency_pct"] = row.latency_pct;
            x["aborted"] = row.aborted;
            rows.append(x);
        }
        return rows;
    }
}

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Logical synchrony network simulator";

    py::register_exception<lsn::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<lsn::GraphError>(m, "GraphError", PyExc_ValueError);

    py::class_<lsn::Trace>(m, "Trace")
        .def_property_readonly("backend", [](const lsn::Trace &t) { return std::string(lsn::to_string(t.meta.backend)); })
        .def_property_readonly("machines", [](const lsn::Trace &t) { return t.meta.machines; })
        .def_property_readonly("edges", [](const lsn::Trace &t) {
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto &e : t.meta.edges)
            {
                out.emplace_back(t.meta.machines[e.src], t.meta.machines[e.dst]);
            }
            return out;
        })
        .def_property_readonly("lambdas", [](const lsn::Trace &t) {
            std::vector<std::int64_t> out;
            for (const auto &e : t.meta.edges)
            {
                out.push_back(e.lambda);
            }
            return out;
        })
        .def_property_readonly("config_hash", [](const lsn::Trace &t) { return t.meta.config_hash; })
        .def_property_readonly("topology_hash", [](const lsn::Trace &t) { return t.meta.topology_hash; })
        .def_property_readonly("seed", [](const lsn::Trace &t) { return t.meta.seed; })
        .def_property_readonly("aborted", &lsn::Trace::aborted)
        .def_property_readonly("abort", [](const lsn::Trace &t) -> py::object { return t.abort ? py::object(abort_dict(t)) : py::none(); })
        .def("__len__", [](const lsn::Trace &t) { return t.records.size(); })
        .def("outputs", [](const lsn::Trace &t, const std::string &machine) {
            const auto it = std::find(t.meta.machines.begin(), t.meta.machines.end(), machine);
            if (it == t.meta.machines.end())
            {
                throw py::key_error(machine);
            }
            return lsn::output_sequence(t, static_cast<lsn::MachineId>(it - t.meta.machines.begin()));
        }, py::arg("machine"))
        .def("fire_times", [](const lsn::Trace &t, const std::string &machine) {
            std::vector<double> out;
            for (const auto &r : t.records)
            {
                if (r.kind == lsn::RecordKind::Fire && t.meta.machines.at(r.machine) == machine)
                {
                    out.push_back(r.time.seconds());
                }
            }
            return out;
        }, py::arg("machine"))
        .def("summary", [](const lsn::Trace &t) { return to_py(lsn::summary_json(t)); })
        .def("firing_rate", [](const lsn::Trace &t, lsn::MachineId machine, double window_s) {
            std::vector<std::pair<double, double>> out;
            for (const auto &w : lsn::firing_rate(t, machine, window_s).windows)
            {
                out.emplace_back(w.start.seconds(), w.rate_hz);
            }
            return out;
        }, py::arg("machine"), py::arg("window_s"))
        .def("to_csv", [](const lsn::Trace &t) {
            std::ostringstream os;
            lsn::write_csv(os, t);
            return os.str();
        });

    m.def("simulate", &simulate, py::arg("config"), py::arg("model") = py::none(), py::arg("duration") = py::none(),
          py::arg("seed") = py::none(), py::arg("jitter_eps") = py::none(),
          "Run a config (path or dict). Aborts end the run early and show up in Trace.abort.");
    m.def("compare_traces", &compare, py::arg("a"), py::arg("b"));
    m.def("invariance_report", &invariance, py::arg("trace"));
    m.def("validate", &validate, py::arg("config"));
    m.def("normalize", &normalize, py::arg("config"), "Topology with every edge lambda >= 0 and cycle sums unchanged.");
    m.def("extended_graph_dot", &extended_graph_dot, py::arg("config"), py::arg("horizon"));
    m.def("sweep_marking", &sweep, py::arg("config"), py::arg("edge"), py::arg("lo"), py::arg("hi"), py::arg("duration") = py::none(),
          py::arg("designated") = py::none());
    m.def("lsfp_initial_marking", &lsn::lsfp_initial_marking, py::arg("link_delay_s"), py::arg("consumer_freq_hz"),
          py::arg("on_cycle") = true);
}
