#include "lsn/ffp.hpp"

#include <cmath>

namespace lsn
{
    std::int64_t real_occupancy(const Network &net, EdgeId edge) { return net.channels[edge].beta(); }

    std::int64_t real_occupancy_from_history(const Network &net, EdgeId edge, SimTime t, SimTime firing_to_arrival)
    {
        const auto &c = net.channels[edge];
        return static_cast<std::int64_t>(net.theta_at(c.src, t - firing_to_arrival)) - static_cast<std::int64_t>(net.theta_at(c.dst, t)) +
               c.initial_fill;
    }

    std::int64_t estimate_occupancy(const Network &net, EdgeId edge, SimTime t)
    {
        const auto &c = net.channels[edge];
        // The reverse link is unbuffered: p sees q's firing count as it was l_qp ago.
        return static_cast<std::int64_t>(net.theta_at(c.src, t)) - static_cast<std::int64_t>(net.theta_at(c.dst, t - c.reverse_delay)) +
               c.initial_fill;
    }

    bool can_fire(const Network &net, MachineId m, SimTime t)
    {
        const auto &mach = net.machines[m];
        for (EdgeId e : mach.inputs)
        {
            if (net.channels[e].buffer.empty())
            {
                return false;
            }
        }
        for (EdgeId e : mach.outputs)
        {
            if (estimate_occupancy(net, e, t) >= net.channels[e].capacity)
            {
                return false;
            }
        }
        return true;
    }

    std::int64_t lsfp_initial_marking(double link_delay_s, double consumer_freq_hz, bool on_cycle)
    {
        if (!(consumer_freq_hz > 0.0))
        {
            throw ConfigError("consumer frequency must be positive");
        }
        if (link_delay_s < 0.0)
        {
            throw ConfigError("link delay must be non-negative");
        }
        // Round away float noise first so that e.g. 2 s × 1 Hz stays exactly 2.
        const double product = std::round(link_delay_s * consumer_freq_hz * 1e9) / 1e9;
        auto tokens = static_cast<std::int64_t>(std::ceil(product));
        if (on_cycle && tokens < 1)
        {
            tokens = 1;
        }
        return tokens;
    }

    std::int64_t default_capacity(std::int64_t marking) noexcept { return 2 * marking + 2; }

    void FfpBackend::initialize(Network &net)
    {
        for (auto &c : net.channels)
        {
            const std::int64_t m = markings_.at(c.id);
            c.capacity = capacities_.at(c.id);
            if (m > c.capacity)
            {
                throw ConfigError("edge " + net.machines[c.src].name + "->" + net.machines[c.dst].name + " marking exceeds its capacity");
            }
            for (std::int64_t k = 0; k < m; ++k)
            {
                c.buffer.push_back({k - m, 0, SimTime{}});
            }
            c.initial_fill = m;
            c.lambda = m;
        }
    }

    TickDecision FfpBackend::decide(const Network &net, MachineId m, SimTime now)
    {
        return can_fire(net, m, now) ? TickDecision::Fire : TickDecision::Stutter;
    }

    void FfpBackend::before_arrival(const Network &net, EdgeId e, SimTime now)
    {
        const auto &c = net.channels[e];
        if (c.beta() >= c.capacity)
        {
            throw SimulationAbort(AbortInfo{"overflow", now, c.dst, e, c.beta(), "back-pressure failed to bound the buffer"});
        }
    }

    SimTime FfpBackend::emit_delay(const Machine &m) const
    {
        return emit_ == EmitTiming::Completion ? period_of(m.omega) : SimTime{};
    }
}
