#pragma once

#include "lsn/errors.hpp"
#include "lsn/graph.hpp"
#include "lsn/time.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lsn
{
    struct MachineSpec
    {
        std::string name;
        double freq_hz = 1.0;
        // Initial program state; defaults to index + 1 so outputs are never all zero.
        std::optional<std::uint64_t> initial_state;
    };

    struct EdgeSpec
    {
        std::string src;
        std::string dst;
        std::optional<std::int64_t> lambda;
        double link_delay_s = 0.0;
        std::optional<double> reverse_delay_s;
        std::optional<std::int64_t> capacity;
        std::optional<std::int64_t> initial_marking;
        // bittide only: overrides the C/2 initial buffer fill.
        std::optional<std::int64_t> initial_fill;

        [[nodiscard]] double reverse_delay() const noexcept { return reverse_delay_s.value_or(link_delay_s); }
    };

    struct Topology
    {
        std::vector<MachineSpec> machines;
        std::vector<EdgeSpec> edges;

        [[nodiscard]] std::optional<MachineId> find_machine(std::string_view name) const;
        [[nodiscard]] MachineId machine_index(std::string_view name) const; // throws ConfigError
        [[nodiscard]] std::optional<EdgeId> find_edge(std::string_view src, std::string_view dst) const;
        [[nodiscard]] MachineId edge_src(EdgeId e) const { return machine_index(edges.at(e).src); }
        [[nodiscard]] MachineId edge_dst(EdgeId e) const { return machine_index(edges.at(e).dst); }

        /// Graph over the machines; each edge takes `lambda`, or `initial_marking`
        /// when lambda is absent. Throws ConfigError when neither is present.
        [[nodiscard]] LsnGraph to_lsn_graph() const;
    };

    enum class Model
    {
        Kpn,
        Ffp,
        Lsfp,
        Bittide,
    };

    const char *to_string(Model m) noexcept;
    Model parse_model(std::string_view s); // throws ConfigError

    enum class ControlKind
    {
        Proportional,
        ProportionalIntegral,
    };

    struct ControllerParams
    {
        ControlKind kind = ControlKind::ProportionalIntegral;
        double kp = 2e-3;
        double ki = 1e-5;
        std::int64_t update_period = 1; // ticks
        double clamp_pct = 5.0;         // ω stays within ±clamp_pct % of nominal
    };

    struct JitterSpec
    {
        std::uint64_t seed = 0;
        SimTime magnitude{}; // ε: offsets are drawn from [0, ε)
    };

    /// When a token-pushing machine's outputs leave it.
    enum class EmitTiming
    {
        Completion, // one local period after the firing starts (execution time = period)
        Tick,       // at the firing instant
    };

    /// Test hook: discard one frame on arrival.
    struct FrameDrop
    {
        EdgeId edge = 0;
        std::int64_t seq = 0;
    };

    struct SimConfig
    {
        Topology topology;
        Model model = Model::Ffp;
        double duration_s = 60.0;
        std::optional<JitterSpec> jitter;
        ControllerParams controller;
        EmitTiming emit = EmitTiming::Completion;
        bool bidirectional = true; // bittide: add missing reverse edges
        std::int64_t kpn_queue_cap = 1'000'000;
        std::optional<FrameDrop> drop_frame;
        // Per-edge marking overrides applied after the model's own marking rule.
        std::map<EdgeId, std::int64_t> marking_overrides;

        /// Stable 64-bit FNV-1a hash of the canonical JSON of the config.
        [[nodiscard]] std::uint64_t hash() const;
    };

    Topology parse_topology(const nlohmann::json &j);
    nlohmann::json to_json(const Topology &t);

    /// Parses a topology file that may also carry simulation sections
    /// (`model`, `duration_s`, `jitter`, `controller`, `emit`, `bidirectional`,
    /// `kpn_queue_cap`, `drop_frame`).
    SimConfig parse_config(const nlohmann::json &j);
    SimConfig load_config(const std::filesystem::path &path);
    nlohmann::json to_json(const SimConfig &c);

    /// Structural checks shared by all runtime backends. Throws ConfigError.
    void validate_runtime_config(const SimConfig &c);

    std::uint64_t fnv1a64(std::string_view bytes) noexcept;
}
