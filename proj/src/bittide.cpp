#include "lsn/bittide.hpp"

#include "lsn/ffp.hpp"

#include <algorithm>
#include <cmath>

namespace lsn
{
    std::vector<ElasticInit> init_bittide_state(const Topology &topology)
    {
        std::vector<ElasticInit> out;
        out.reserve(topology.edges.size());
        for (const auto &e : topology.edges)
        {
            ElasticInit init;
            init.capacity = e.capacity.value_or(default_capacity(e.initial_marking.value_or(0)));
            if (init.capacity < 2)
            {
                throw ConfigError("bittide edge " + e.src + "->" + e.dst + " needs capacity >= 2 for control headroom");
            }
            init.beta0 = e.initial_fill.value_or(init.capacity / 2);
            if (init.beta0 < 0 || init.beta0 > init.capacity)
            {
                throw ConfigError("bittide edge " + e.src + "->" + e.dst + " initial_fill outside [0, capacity]");
            }
            const double f_dst = topology.machines.at(topology.machine_index(e.dst)).freq_hz;
            init.gamma0 = lsfp_initial_marking(e.link_delay_s, f_dst, false);
            const SimTime l = SimTime::from_seconds(e.link_delay_s);
            for (std::int64_t k = 0; k < init.gamma0; ++k)
            {
                init.link_arrivals.push_back(SimTime::from_ns((2 * k + 1) * l.ns / (2 * init.gamma0)));
            }
            init.lambda = init.beta0 + init.gamma0;
            out.push_back(std::move(init));
        }
        return out;
    }

    Topology with_reverse_links(const Topology &topology)
    {
        Topology t = topology;
        for (const auto &e : topology.edges)
        {
            if (!topology.find_edge(e.dst, e.src))
            {
                EdgeSpec r;
                r.src = e.dst;
                r.dst = e.src;
                r.link_delay_s = e.reverse_delay();
                r.reverse_delay_s = e.link_delay_s;
                r.capacity = e.capacity;
                r.initial_marking = e.initial_marking;
                t.edges.push_back(std::move(r));
            }
        }
        return t;
    }

    std::int64_t observed_lambda_bt(const Network &net, EdgeId edge) { return net.channel_lambda(edge); }

    double occupancy_error(const Network &net, MachineId m)
    {
        const auto &inputs = net.machines[m].inputs;
        if (inputs.empty())
        {
            return 0.0;
        }
        double sum = 0.0;
        for (EdgeId e : inputs)
        {
            const auto &c = net.channels[e];
            const double cap = static_cast<double>(c.capacity);
            sum += (static_cast<double>(c.beta()) - cap / 2.0) / cap;
        }
        return sum / static_cast<double>(inputs.size());
    }

    double control_update(double error, double nominal_hz, const ControllerParams &policy, ClockControlState &state)
    {
        double correction = policy.kp * error;
        if (policy.kind == ControlKind::ProportionalIntegral)
        {
            state.integral += error;
            correction += policy.ki * state.integral;
        }
        const double bound = policy.clamp_pct / 100.0;
        correction = std::clamp(correction, -bound, bound);
        return nominal_hz * (1.0 + correction);
    }

    void BittideBackend::initialize(Network &net)
    {
        control_.assign(net.machines.size(), {});
        for (auto &c : net.channels)
        {
            const auto &init = init_.at(c.id);
            c.capacity = init.capacity;
            c.initial_fill = init.beta0;
            c.initial_link = init.gamma0;
            c.lambda = init.lambda;
            // Oldest frames sit in the buffer, later ones on the link.
            std::int64_t seq = -init.lambda;
            for (std::int64_t k = 0; k < init.beta0; ++k)
            {
                c.buffer.push_back({seq++, 0, SimTime{}});
            }
            for (std::int64_t k = 0; k < init.gamma0; ++k)
            {
                c.link.push_back({{seq++, 0, SimTime{}}, init.link_arrivals[static_cast<std::size_t>(k)]});
            }
        }
    }

    TickDecision BittideBackend::decide(const Network &net, MachineId m, SimTime now)
    {
        for (EdgeId e : net.machines[m].inputs)
        {
            const auto &c = net.channels[e];
            if (c.buffer.empty())
            {
                throw SimulationAbort(AbortInfo{"underflow", now, m, e, 0,
                                                "elastic buffer " + net.machines[c.src].name + "->" + net.machines[c.dst].name +
                                                    " empty at tick " + std::to_string(net.machines[m].theta)});
            }
        }
        control_[m].edge_error = occupancy_error(net, m);
        return TickDecision::Fire;
    }

    void BittideBackend::after_fire(Network &net, MachineId m, SimTime)
    {
        auto &state = control_[m];
        if (++state.ticks_since_update < policy_.update_period)
        {
            return;
        }
        state.ticks_since_update = 0;
        auto &mach = net.machines[m];
        // Reading only before or only after the pop biases the time-average by half a frame.
        const double error = (state.edge_error + occupancy_error(net, m)) / 2.0;
        mach.omega = control_update(error, mach.nominal_hz, policy_, state);
    }

    void BittideBackend::before_arrival(const Network &net, EdgeId e, SimTime now)
    {
        const auto &c = net.channels[e];
        if (c.beta() >= c.capacity)
        {
            throw SimulationAbort(AbortInfo{"overflow", now, c.dst, e, c.beta(),
                                            "elastic buffer " + net.machines[c.src].name + "->" + net.machines[c.dst].name + " full on arrival"});
        }
    }
}
