#pragma once

#include "lsn/config.hpp"
#include "lsn/engine.hpp"

#include <cstdint>
#include <vector>

namespace lsn
{
    /// Tokens currently in the receiver buffer.
    std::int64_t real_occupancy(const Network &net, EdgeId edge);

    /// θ_p(t − l_pq) − θ_q(t) + β(0) from the recorded firing histories, where
    /// l_pq is the time from a firing to its token's arrival (execution latency
    /// included). Matches real_occupancy whenever no arrival is pending at `t`.
    std::int64_t real_occupancy_from_history(const Network &net, EdgeId edge, SimTime t, SimTime firing_to_arrival);

    /// Producer-side bound θ_p(t) − θ_q(t − l_qp) + β(0). Never below the real occupancy.
    std::int64_t estimate_occupancy(const Network &net, EdgeId edge, SimTime t);

    /// Every input non-empty and every output estimate below capacity.
    bool can_fire(const Network &net, MachineId m, SimTime t);

    /// Tokens covering the in-flight time of an edge: ceil(l × f), at least one on
    /// edges that lie on a cycle. Throws ConfigError for f <= 0 or l < 0.
    std::int64_t lsfp_initial_marking(double link_delay_s, double consumer_freq_hz, bool on_cycle = true);

    /// C = 2 × marking + 2 unless configured.
    std::int64_t default_capacity(std::int64_t marking) noexcept;

    /// Bounded receiver-side FIFOs with blocking reads and back-pressure-gated writes.
    class FfpBackend final : public Backend
    {
    public:
        FfpBackend(Model model, std::vector<std::int64_t> markings, std::vector<std::int64_t> capacities, EmitTiming emit)
            : model_(model), markings_(std::move(markings)), capacities_(std::move(capacities)), emit_(emit) {}

        [[nodiscard]] Model model() const override { return model_; }
        void initialize(Network &net) override;
        TickDecision decide(const Network &net, MachineId m, SimTime now) override;
        void before_arrival(const Network &net, EdgeId e, SimTime now) override;
        [[nodiscard]] SimTime emit_delay(const Machine &m) const override;

    private:
        Model model_;
        std::vector<std::int64_t> markings_;
        std::vector<std::int64_t> capacities_;
        EmitTiming emit_;
    };
}
