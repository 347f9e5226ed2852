#include "lsn/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace lsn
{
    using nlohmann::json;

    std::optional<MachineId> Topology::find_machine(std::string_view name) const
    {
        for (std::size_t i = 0; i < machines.size(); ++i)
        {
            if (machines[i].name == name)
            {
                return static_cast<MachineId>(i);
            }
        }
        return std::nullopt;
    }

    MachineId Topology::machine_index(std::string_view name) const
    {
        if (auto m = find_machine(name))
        {
            return *m;
        }
        throw ConfigError("unknown machine '" + std::string(name) + "'");
    }

    std::optional<EdgeId> Topology::find_edge(std::string_view src, std::string_view dst) const
    {
        for (std::size_t e = 0; e < edges.size(); ++e)
        {
            if (edges[e].src == src && edges[e].dst == dst)
            {
                return static_cast<EdgeId>(e);
            }
        }
        return std::nullopt;
    }

    LsnGraph Topology::to_lsn_graph() const
    {
        LsnGraph g;
        for (const auto &m : machines)
        {
            g.names.push_back(m.name);
        }
        for (const auto &e : edges)
        {
            std::int64_t lam = 0;
            if (e.lambda)
            {
                lam = *e.lambda;
            }
            else if (e.initial_marking)
            {
                lam = *e.initial_marking;
            }
            else
            {
                throw ConfigError("edge " + e.src + "->" + e.dst + " has neither lambda nor initial_marking");
            }
            g.edges.push_back({machine_index(e.src), machine_index(e.dst), lam});
        }
        return g;
    }

    const char *to_string(Model m) noexcept
    {
        switch (m)
        {
        case Model::Kpn:
            return "kpn";
        case Model::Ffp:
            return "ffp";
        case Model::Lsfp:
            return "lsfp";
        case Model::Bittide:
            return "bittide";
        }
        return "?";
    }

    Model parse_model(std::string_view s)
    {
        if (s == "kpn")
            return Model::Kpn;
        if (s == "ffp")
            return Model::Ffp;
        if (s == "lsfp")
            return Model::Lsfp;
        if (s == "bittide")
            return Model::Bittide;
        throw ConfigError("unknown model '" + std::string(s) + "' (expected kpn|ffp|lsfp|bittide)");
    }

    namespace
    {
        template <class T>
        std::optional<T> opt(const json &j, const char *key)
        {
            if (auto it = j.find(key); it != j.end() && !it->is_null())
            {
                return it->get<T>();
            }
            return std::nullopt;
        }

        template <class T>
        void put(json &j, const char *key, const std::optional<T> &v)
        {
            if (v)
            {
                j[key] = *v;
            }
        }
    }

    Topology parse_topology(const json &j)
    {
        try
        {
            Topology t;
            std::set<std::string> names;
            for (const auto &m : j.at("machines"))
            {
                MachineSpec spec;
                spec.name = m.at("name").get<std::string>();
                spec.freq_hz = m.value("freq_hz", 1.0);
                spec.initial_state = opt<std::uint64_t>(m, "initial_state");
                if (!names.insert(spec.name).second)
                {
                    throw ConfigError("duplicate machine name '" + spec.name + "'");
                }
                t.machines.push_back(std::move(spec));
            }
            for (const auto &e : j.value("edges", json::array()))
            {
                EdgeSpec spec;
                spec.src = e.at("src").get<std::string>();
                spec.dst = e.at("dst").get<std::string>();
                spec.lambda = opt<std::int64_t>(e, "lambda");
                spec.link_delay_s = e.value("link_delay_s", 0.0);
                spec.reverse_delay_s = opt<double>(e, "reverse_delay_s");
                spec.capacity = opt<std::int64_t>(e, "capacity");
                spec.initial_marking = opt<std::int64_t>(e, "initial_marking");
                spec.initial_fill = opt<std::int64_t>(e, "initial_fill");
                (void)t.machine_index(spec.src);
                (void)t.machine_index(spec.dst);
                t.edges.push_back(std::move(spec));
            }
            return t;
        }
        catch (const json::exception &ex)
        {
            throw ConfigError(std::string("malformed topology: ") + ex.what());
        }
    }

    json to_json(const Topology &t)
    {
        json j;
        j["machines"] = json::array();
        for (const auto &m : t.machines)
        {
            json jm{{"name", m.name}, {"freq_hz", m.freq_hz}};
            put(jm, "initial_state", m.initial_state);
            j["machines"].push_back(std::move(jm));
        }
        j["edges"] = json::array();
        for (const auto &e : t.edges)
        {
            json je{{"src", e.src}, {"dst", e.dst}, {"link_delay_s", e.link_delay_s}};
            put(je, "lambda", e.lambda);
            put(je, "reverse_delay_s", e.reverse_delay_s);
            put(je, "capacity", e.capacity);
            put(je, "initial_marking", e.initial_marking);
            put(je, "initial_fill", e.initial_fill);
            j["edges"].push_back(std::move(je));
        }
        return j;
    }

    SimConfig parse_config(const json &j)
    {
        SimConfig c;
        c.topology = parse_topology(j);
        try
        {
            if (auto m = opt<std::string>(j, "model"))
            {
                c.model = parse_model(*m);
            }
            c.duration_s = j.value("duration_s", c.duration_s);
            if (auto it = j.find("jitter"); it != j.end() && !it->is_null())
            {
                c.jitter = JitterSpec{it->value("seed", std::uint64_t{0}), SimTime::from_seconds(it->value("eps_s", 0.0))};
            }
            if (auto it = j.find("controller"); it != j.end())
            {
                const auto &jc = *it;
                if (auto k = opt<std::string>(jc, "kind"))
                {
                    if (*k == "p")
                        c.controller.kind = ControlKind::Proportional;
                    else if (*k == "pi")
                        c.controller.kind = ControlKind::ProportionalIntegral;
                    else
                        throw ConfigError("controller kind must be p or pi");
                }
                c.controller.kp = jc.value("kp", c.controller.kp);
                c.controller.ki = jc.value("ki", c.controller.ki);
                c.controller.update_period = jc.value("update_period", c.controller.update_period);
                c.controller.clamp_pct = jc.value("clamp_pct", c.controller.clamp_pct);
            }
            if (auto e = opt<std::string>(j, "emit"))
            {
                if (*e == "completion")
                    c.emit = EmitTiming::Completion;
                else if (*e == "tick")
                    c.emit = EmitTiming::Tick;
                else
                    throw ConfigError("emit must be completion or tick");
            }
            c.bidirectional = j.value("bidirectional", c.bidirectional);
            c.kpn_queue_cap = j.value("kpn_queue_cap", c.kpn_queue_cap);
            if (auto it = j.find("drop_frame"); it != j.end() && !it->is_null())
            {
                auto e = c.topology.find_edge(it->at("src").get<std::string>(), it->at("dst").get<std::string>());
                if (!e)
                {
                    throw ConfigError("drop_frame names an edge that does not exist");
                }
                c.drop_frame = FrameDrop{*e, it->at("seq").get<std::int64_t>()};
            }
        }
        catch (const json::exception &ex)
        {
            throw ConfigError(std::string("malformed config: ") + ex.what());
        }
        return c;
    }

    SimConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ConfigError("cannot open config file " + path.string());
        }
        json j;
        try
        {
            in >> j;
        }
        catch (const json::exception &ex)
        {
            throw ConfigError("cannot parse " + path.string() + ": " + ex.what());
        }
        return parse_config(j);
    }

    json to_json(const SimConfig &c)
    {
        json j = to_json(c.topology);
        j["model"] = to_string(c.model);
        j["duration_s"] = c.duration_s;
        if (c.jitter)
        {
            j["jitter"] = {{"seed", c.jitter->seed}, {"eps_s", c.jitter->magnitude.seconds()}};
        }
        j["controller"] = {{"kind", c.controller.kind == ControlKind::Proportional ? "p" : "pi"},
                           {"kp", c.controller.kp},
                           {"ki", c.controller.ki},
                           {"update_period", c.controller.update_period},
                           {"clamp_pct", c.controller.clamp_pct}};
        j["emit"] = c.emit == EmitTiming::Completion ? "completion" : "tick";
        j["bidirectional"] = c.bidirectional;
        j["kpn_queue_cap"] = c.kpn_queue_cap;
        if (c.drop_frame)
        {
            const auto &e = c.topology.edges.at(c.drop_frame->edge);
            j["drop_frame"] = {{"src", e.src}, {"dst", e.dst}, {"seq", c.drop_frame->seq}};
        }
        if (!c.marking_overrides.empty())
        {
            json o = json::object();
            for (auto [e, m] : c.marking_overrides)
            {
                o[std::to_string(e)] = m;
            }
            j["marking_overrides"] = std::move(o);
        }
        return j;
    }

    std::uint64_t fnv1a64(std::string_view bytes) noexcept
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : bytes)
        {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::uint64_t SimConfig::hash() const { return fnv1a64(to_json(*this).dump()); }

    void validate_runtime_config(const SimConfig &c)
    {
        const auto &t = c.topology;
        if (t.machines.empty())
        {
            throw ConfigError("topology has no machines");
        }
        for (const auto &m : t.machines)
        {
            if (!(m.freq_hz > 0.0) || !std::isfinite(m.freq_hz))
            {
                throw ConfigError("machine " + m.name + " needs a positive freq_hz");
            }
        }
        std::set<std::pair<std::string, std::string>> pairs;
        for (const auto &e : t.edges)
        {
            if (e.src == e.dst)
            {
                throw ConfigError("self-loop on " + e.src);
            }
            if (!pairs.insert({e.src, e.dst}).second)
            {
                throw ConfigError("duplicate edge " + e.src + "->" + e.dst);
            }
            if (e.link_delay_s < 0.0 || e.reverse_delay() < 0.0)
            {
                throw ConfigError("edge " + e.src + "->" + e.dst + " has a negative delay");
            }
            if (e.capacity && *e.capacity < 1)
            {
                throw ConfigError("edge " + e.src + "->" + e.dst + " capacity must be >= 1");
            }
            if (e.initial_marking && *e.initial_marking < 0)
            {
                throw ConfigError("edge " + e.src + "->" + e.dst + " has a negative initial_marking");
            }
        }
        if (!(c.duration_s > 0.0))
        {
            throw ConfigError("duration must be positive");
        }
        if (c.jitter)
        {
            double min_period = 1e300;
            for (const auto &m : t.machines)
            {
                min_period = std::min(min_period, 1.0 / m.freq_hz);
            }
            if (c.jitter->magnitude.ns < 0 || c.jitter->magnitude.seconds() >= min_period)
            {
                throw ConfigError("jitter eps must be in [0, shortest period)");
            }
        }
        if (c.controller.update_period < 1)
        {
            throw ConfigError("controller update_period must be >= 1");
        }
        if (!std::isfinite(c.controller.kp) || !std::isfinite(c.controller.ki))
        {
            throw ConfigError("controller gains must be finite");
        }
    }
}
