#pragma once

#include "lsn/config.hpp"
#include "lsn/engine.hpp"
#include "lsn/graph.hpp"

namespace lsn
{
    /// Same machines and edges; λ(p→q) = initial FIFO occupancy (0 when unset).
    LsnGraph kpn_to_lsn(const Topology &kpn);

    /// Logical delay observed on a channel at the current event boundary:
    /// β + γ + θ_q − θ_p, where in-flight tokens count as queued.
    std::int64_t observed_lambda(const Network &net, EdgeId edge);

    /// Unbounded FIFOs with blocking reads. Blocked machines retry at their next tick.
    class KpnBackend final : public Backend
    {
    public:
        KpnBackend(std::vector<std::int64_t> markings, std::int64_t queue_cap, EmitTiming emit)
            : markings_(std::move(markings)), queue_cap_(queue_cap), emit_(emit) {}

        [[nodiscard]] Model model() const override { return Model::Kpn; }
        void initialize(Network &net) override;
        TickDecision decide(const Network &net, MachineId m, SimTime now) override;
        void before_arrival(const Network &net, EdgeId e, SimTime now) override;
        [[nodiscard]] SimTime emit_delay(const Machine &m) const override;

        /// True iff every input queue holds a token.
        static bool inputs_ready(const Network &net, MachineId m);

    private:
        std::vector<std::int64_t> markings_;
        std::int64_t queue_cap_;
        EmitTiming emit_;
    };
}
