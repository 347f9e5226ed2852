#pragma once

#include "lsn/errors.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lsn
{
    using MachineId = std::uint32_t;
    using EdgeId = std::uint32_t;

    struct LsnEdge
    {
        MachineId src = 0;
        MachineId dst = 0;
        std::int64_t lambda = 0; // logical delay in ticks
    };

    /// Machines are the dense indices 0..size()-1, named by `names`.
    struct LsnGraph
    {
        std::vector<std::string> names;
        std::vector<LsnEdge> edges;

        [[nodiscard]] std::size_t size() const noexcept { return names.size(); }
        [[nodiscard]] std::optional<EdgeId> find_edge(MachineId src, MachineId dst) const;
        [[nodiscard]] std::optional<MachineId> find_machine(std::string_view name) const;
    };

    enum class ViolationKind
    {
        SelfLoop,
        NonpositiveCycle,
        DuplicateEdge,
    };

    const char *to_string(ViolationKind k) noexcept;

    struct Violation
    {
        ViolationKind kind;
        std::string detail;
        // Machines along the offending edge or cycle; a cycle is listed without
        // repeating its first vertex.
        std::vector<MachineId> witness;
    };

    struct ValidationReport
    {
        std::vector<Violation> violations;
        // Set when cycle enumeration hit its cap and further non-positive cycles may exist.
        bool truncated = false;

        [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
    };

    /// Reports self-loops, duplicate ordered pairs and every simple cycle whose
    /// λ-sum is <= 0. Enumeration of offending cycles stops after `cycle_cap`.
    ValidationReport validate_lsn(const LsnGraph &graph, std::size_t cycle_cap = 4096);

    /// One cycle with λ-sum <= 0, found by Bellman-Ford on scaled weights, or
    /// nullopt when every cycle is strictly positive.
    std::optional<std::vector<MachineId>> find_nonpositive_cycle(const LsnGraph &graph);

    struct NormalizedGraph
    {
        LsnGraph graph;
        // λ'(i→j) = λ(i→j) + offsets[i] - offsets[j]
        std::vector<std::int64_t> offsets;
    };

    /// Relabels machine clocks with shortest-path potentials so that every edge
    /// delay is non-negative. Throws GraphError when some cycle sum is <= 0.
    NormalizedGraph normalize_nonnegative(const LsnGraph &graph);

    /// Sum of λ along consecutive machines of `path`. Throws GraphError naming a
    /// missing pair.
    std::int64_t cumulative_path_delay(const LsnGraph &graph, std::span<const MachineId> path);

    /// Sum of λ around a cycle given as a vertex list (closing edge implied).
    std::int64_t cycle_delay(const LsnGraph &graph, std::span<const MachineId> cycle);

    /// True when src reaches dst through edges of the graph (dst == src counts only
    /// via a proper cycle).
    bool on_cycle(const LsnGraph &graph, EdgeId edge);
}
