#pragma once

#include "lsn/config.hpp"
#include "lsn/engine.hpp"

#include <cstdint>
#include <vector>

namespace lsn
{
    /// Initial contents of one elastic channel.
    struct ElasticInit
    {
        std::int64_t capacity = 0;
        std::int64_t beta0 = 0;             // frames pre-filled in the buffer
        std::int64_t gamma0 = 0;            // frames pre-filled on the link
        std::vector<SimTime> link_arrivals; // arrival time of each pre-filled link frame
        std::int64_t lambda = 0;            // β(0) + γ(0), all clocks start at θ = 0
    };

    /// Buffers filled to C/2 (or `initial_fill`), links to ceil(l × f_dst) frames
    /// evenly spaced over the delay. Throws ConfigError when C < 2.
    std::vector<ElasticInit> init_bittide_state(const Topology &topology);

    /// Adds j→i for every i→j lacking one, with the same delay and capacity.
    Topology with_reverse_links(const Topology &topology);

    /// γ + β + θ_j − θ_i for edge i→j at the current event boundary.
    std::int64_t observed_lambda_bt(const Network &net, EdgeId edge);

    struct ClockControlState
    {
        double integral = 0.0;
        std::int64_t ticks_since_update = 0;
        double edge_error = 0.0; // occupancy error sampled before the latest tick consumed
    };

    /// Mean over inbound edges of (β − C/2) / C; 0 without inbound edges.
    double occupancy_error(const Network &net, MachineId m);

    /// New frequency for a machine with the given occupancy error:
    /// P: ω = ω_nom (1 + kp e); PI: integral += e, ω = ω_nom (1 + kp e + ki integral).
    /// Clamped to ω_nom (1 ± clamp_pct / 100).
    double control_update(double error, double nominal_hz, const ControllerParams &policy, ClockControlState &state);

    /// Free-running machines: every tick consumes and emits on all edges; an empty
    /// inbound buffer or a full one on arrival aborts the run.
    class BittideBackend final : public Backend
    {
    public:
        BittideBackend(std::vector<ElasticInit> init, ControllerParams policy) : init_(std::move(init)), policy_(policy) {}

        [[nodiscard]] Model model() const override { return Model::Bittide; }
        void initialize(Network &net) override;
        TickDecision decide(const Network &net, MachineId m, SimTime now) override;
        void after_fire(Network &net, MachineId m, SimTime now) override;
        void before_arrival(const Network &net, EdgeId e, SimTime now) override;

        [[nodiscard]] const ClockControlState &controller(MachineId m) const { return control_.at(m); }

    private:
        std::vector<ElasticInit> init_;
        ControllerParams policy_;
        std::vector<ClockControlState> control_;
    };
}
