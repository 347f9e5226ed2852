#include "lsn/simulate.hpp"

#include "lsn/bittide.hpp"
#include "lsn/ffp.hpp"
#include "lsn/kpn.hpp"

namespace lsn
{
    Topology runtime_topology(const SimConfig &config, Model model)
    {
        if (model == Model::Bittide && config.bidirectional)
        {
            return with_reverse_links(config.topology);
        }
        return config.topology;
    }

    std::vector<std::int64_t> resolve_markings(const SimConfig &config, Model model)
    {
        const Topology topo = runtime_topology(config, model);
        std::vector<std::int64_t> markings;
        markings.reserve(topo.edges.size());
        const LsnGraph structure = kpn_to_lsn(topo);
        for (std::size_t e = 0; e < topo.edges.size(); ++e)
        {
            const auto &spec = topo.edges[e];
            if (model == Model::Lsfp)
            {
                const double f = topo.machines[topo.machine_index(spec.dst)].freq_hz;
                markings.push_back(lsfp_initial_marking(spec.link_delay_s, f, on_cycle(structure, static_cast<EdgeId>(e))));
            }
            else
            {
                markings.push_back(spec.initial_marking.value_or(0));
            }
        }
        for (auto [e, m] : config.marking_overrides)
        {
            if (e >= markings.size())
            {
                throw ConfigError("marking override for unknown edge " + std::to_string(e));
            }
            if (m < 0)
            {
                throw ConfigError("marking override must be non-negative");
            }
            markings[e] = m;
        }
        return markings;
    }

    std::vector<std::int64_t> resolve_capacities(const SimConfig &config, Model model)
    {
        const Topology topo = runtime_topology(config, model);
        const auto markings = resolve_markings(config, model);
        std::vector<std::int64_t> caps;
        for (std::size_t e = 0; e < topo.edges.size(); ++e)
        {
            caps.push_back(topo.edges[e].capacity.value_or(default_capacity(markings[e])));
        }
        return caps;
    }

    std::unique_ptr<Engine> make_engine(const SimConfig &config, Model model, std::optional<JitterSpec> jitter, const RunOptions &options)
    {
        validate_runtime_config(config);
        if (jitter)
        {
            SimConfig probe = config;
            probe.jitter = jitter;
            validate_runtime_config(probe);
        }
        const Topology topo = runtime_topology(config, model);
        for (const auto &e : topo.edges)
        {
            if (e.lambda && *e.lambda < 0)
            {
                throw ConfigError("runtime backends need non-negative logical delays; normalize the topology first");
            }
        }

        std::unique_ptr<Backend> backend;
        switch (model)
        {
        case Model::Kpn:
            backend = std::make_unique<KpnBackend>(resolve_markings(config, model), config.kpn_queue_cap, config.emit);
            break;
        case Model::Ffp:
        case Model::Lsfp:
            backend = std::make_unique<FfpBackend>(model, resolve_markings(config, model), resolve_capacities(config, model), config.emit);
            break;
        case Model::Bittide:
            backend = std::make_unique<BittideBackend>(init_bittide_state(topo), config.controller);
            break;
        }

        SimConfig canonical = config;
        canonical.model = model;
        canonical.jitter.reset();
        TraceMeta meta;
        meta.config_hash = canonical.hash();
        meta.topology_hash = fnv1a64(to_json(config.topology).dump());
        meta.backend = model;
        if (jitter)
        {
            meta.seed = jitter->seed;
        }
        for (const auto &m : topo.machines)
        {
            meta.machines.push_back(m.name);
            meta.nominal_hz.push_back(m.freq_hz);
        }

        EngineOptions eo;
        eo.jitter = jitter;
        eo.drop_frame = config.drop_frame;
        eo.observer = options.observer;
        eo.record_arrivals = options.record_arrivals;
        return std::make_unique<Engine>(build_network(topo, options.programs), std::move(backend), std::move(meta), std::move(eo));
    }

    Trace run(const SimConfig &config, Model model, SimTime duration, std::optional<JitterSpec> jitter, const RunOptions &options)
    {
        return make_engine(config, model, jitter, options)->run(duration);
    }

    Trace run(const SimConfig &config, const RunOptions &options)
    {
        return run(config, config.model, SimTime::from_seconds(config.duration_s), config.jitter, options);
    }
}
