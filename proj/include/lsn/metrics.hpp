#pragma once

#include "lsn/config.hpp"
#include "lsn/trace.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lsn
{
    struct RateWindow
    {
        SimTime start;
        double rate_hz = 0.0;
    };

    /// Fired ticks per second over contiguous windows of one machine.
    struct RateSeries
    {
        MachineId machine = 0;
        SimTime window;
        std::vector<RateWindow> windows;
    };

    /// Only full windows inside the trace span are reported. Throws
    /// std::invalid_argument when window_s <= 0.
    RateSeries firing_rate(const Trace &t, MachineId machine, double window_s);

    /// End of the simulated span: the abort time or the run duration.
    SimTime trace_end(const Trace &t);

    /// The later of 20% of the run and the time after which every machine's
    /// windowed mean ω stays within 0.5% of its last window's value.
    SimTime steady_state_start(const Trace &t);

    /// Fired ticks of `machine` in [from, to) divided by the span.
    double mean_firing_rate(const Trace &t, MachineId machine, SimTime from, SimTime to);

    /// Mean spacing of consecutive firings at or after `from`; nullopt with fewer than two.
    std::optional<double> mean_firing_period(const Trace &t, MachineId machine, SimTime from);

    struct LatencyRecord
    {
        EdgeId edge = 0;
        std::vector<std::int64_t> seqs;
        std::vector<double> tau_s; // consumption − emission, per matched frame
        double min_s = 0.0;
        double mean_s = 0.0;
        double max_s = 0.0;
        // l + mean β / mean ω_dst over the same span.
        double predicted_s = 0.0;
        double consumer_period_s = 0.0;
    };

    /// Frames emitted at or after `from` and consumed before the trace ends.
    /// Pre-loaded frames have no emission and are skipped.
    LatencyRecord channel_latency(const Trace &t, EdgeId edge, SimTime from = {});

    struct OccupancyStats
    {
        EdgeId edge = 0;
        double mean = 0.0; // time-weighted
        std::int64_t min = 0;
        std::int64_t max = 0;
        std::int64_t capacity = 0;
    };

    /// Time-weighted receiver-buffer occupancy over [from, trace end).
    OccupancyStats occupancy_stats(const Trace &t, EdgeId edge, SimTime from = {});

    /// Time-weighted frequency of `machine` over [from, trace end).
    double mean_omega(const Trace &t, MachineId machine, SimTime from = {});
    double mean_omega_between(const Trace &t, MachineId machine, SimTime from, SimTime to);

    struct InvarianceVerdict
    {
        EdgeId edge = 0;
        std::set<std::int64_t> frame_lambdas; // consumer index − frame seq
        std::set<std::int64_t> state_lambdas; // β + γ + θ_dst − θ_src after every event
        std::int64_t expected = 0;
        [[nodiscard]] bool ok() const noexcept;
    };

    struct InvarianceReport
    {
        std::vector<InvarianceVerdict> edges;
        std::vector<std::string> warnings;
        std::size_t firings = 0;
        [[nodiscard]] bool ok() const noexcept;
    };

    InvarianceReport invariance_report(const Trace &t);

    struct SweepRow
    {
        std::int64_t marking = 0;
        double rate_hz = 0.0;
        double rate_pct = 0.0;    // relative to the designated machine's nominal
        double latency_s = 0.0;
        double latency_pct = 0.0; // relative to the minimum across the sweep
        bool aborted = false;
    };

    struct SweepResult
    {
        EdgeId edge = 0;
        MachineId designated = 0;
        std::vector<SweepRow> rows;
    };

    /// Slowest nominal machine, first on ties.
    MachineId slowest_machine(const Topology &t);

    /// One run per marking in [lo, hi] on `edge`; runs execute in parallel.
    /// Throws ConfigError for a non-FFP model, an empty range or a bad edge.
    SweepResult sweep_marking(const SimConfig &config, EdgeId edge, std::int64_t lo, std::int64_t hi, SimTime duration,
                              std::optional<MachineId> designated = std::nullopt);

    /// Rates, occupancy, latency and invariance per machine and edge.
    nlohmann::json summary_json(const Trace &t);

    void write_sweep_csv(std::ostream &os, const SweepResult &r);
    void write_rate_csv(std::ostream &os, const Trace &t, double window_s);

    struct PlotSeries
    {
        std::string name;
        std::vector<std::pair<double, double>> points;
    };

    /// Whitespace-separated `x y` blocks, one per series, headed by `# name`
    /// and separated by blank lines.
    void write_plot_data(std::ostream &os, const std::vector<PlotSeries> &series);

    std::vector<PlotSeries> rate_series(const Trace &t, double window_s);
    std::vector<PlotSeries> occupancy_series(const Trace &t);
    std::vector<PlotSeries> sweep_series(const SweepResult &r);
}
