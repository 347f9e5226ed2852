#include "lsn/kpn.hpp"

namespace lsn
{
    LsnGraph kpn_to_lsn(const Topology &kpn)
    {
        LsnGraph g;
        for (const auto &m : kpn.machines)
        {
            g.names.push_back(m.name);
        }
        for (const auto &e : kpn.edges)
        {
            g.edges.push_back({kpn.machine_index(e.src), kpn.machine_index(e.dst), e.initial_marking.value_or(0)});
        }
        return g;
    }

    std::int64_t observed_lambda(const Network &net, EdgeId edge) { return net.channel_lambda(edge); }

    void KpnBackend::initialize(Network &net)
    {
        for (auto &c : net.channels)
        {
            const std::int64_t m = markings_.at(c.id);
            for (std::int64_t k = 0; k < m; ++k)
            {
                c.buffer.push_back({k - m, 0, SimTime{}});
            }
            c.initial_fill = m;
            c.capacity = 0;
            c.lambda = m;
        }
    }

    bool KpnBackend::inputs_ready(const Network &net, MachineId m)
    {
        for (EdgeId e : net.machines[m].inputs)
        {
            if (net.channels[e].buffer.empty())
            {
                return false;
            }
        }
        return true;
    }

    TickDecision KpnBackend::decide(const Network &net, MachineId m, SimTime)
    {
        return inputs_ready(net, m) ? TickDecision::Fire : TickDecision::Stutter;
    }

    void KpnBackend::before_arrival(const Network &net, EdgeId e, SimTime now)
    {
        const auto &c = net.channels[e];
        if (c.beta() >= queue_cap_)
        {
            throw SimulationAbort(AbortInfo{"queue-cap", now, c.dst, e, c.beta(),
                                            "queue " + net.machines[c.src].name + "->" + net.machines[c.dst].name + " reached the safety cap of " +
                                                std::to_string(queue_cap_)});
        }
    }

    SimTime KpnBackend::emit_delay(const Machine &m) const
    {
        return emit_ == EmitTiming::Completion ? period_of(m.omega) : SimTime{};
    }
}
