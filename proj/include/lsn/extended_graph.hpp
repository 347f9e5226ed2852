#pragma once

#include "lsn/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lsn
{
    /// An event (machine, θ) of a finite execution.
    struct EventId
    {
        MachineId machine = 0;
        std::int64_t count = 0;

        friend bool operator==(const EventId &, const EventId &) = default;
    };

    enum class ExtEdgeKind
    {
        Computation,   // (M, n) -> (M, n + 1)
        Communication, // (Mi, n) -> (Mj, n + λ)
        Initial,       // ⊥ -> (M, 0), or ⊥ -> (Mj, m) carrying an initial condition
        Final,         // (M, horizon - 1) -> ⊤
    };

    struct ExtEdge
    {
        std::size_t from = 0;
        std::size_t to = 0;
        ExtEdgeKind kind = ExtEdgeKind::Computation;
        // LSN edge behind a communication or initial-condition edge, else -1.
        std::int64_t lsn_edge = -1;
    };

    /// Event-level dependency graph over a horizon of `horizon` events per machine.
    /// Node 0 is ⊥, node 1 is ⊤, node 2 + machine * horizon + n is (machine, n).
    struct ExtendedGraph
    {
        std::size_t machine_count = 0;
        std::int64_t horizon = 0;
        std::vector<ExtEdge> edges;

        static constexpr std::size_t bottom = 0;
        static constexpr std::size_t top = 1;

        [[nodiscard]] std::size_t node_count() const noexcept { return 2 + machine_count * static_cast<std::size_t>(horizon); }
        [[nodiscard]] std::size_t event_count() const noexcept { return machine_count * static_cast<std::size_t>(horizon); }
        [[nodiscard]] std::size_t node_of(EventId e) const noexcept { return 2 + e.machine * static_cast<std::size_t>(horizon) + static_cast<std::size_t>(e.count); }
        [[nodiscard]] bool is_event(std::size_t node) const noexcept { return node >= 2; }
        [[nodiscard]] EventId event_of(std::size_t node) const noexcept
        {
            const auto k = node - 2;
            return {static_cast<MachineId>(k / static_cast<std::size_t>(horizon)), static_cast<std::int64_t>(k % static_cast<std::size_t>(horizon))};
        }
        [[nodiscard]] std::vector<const ExtEdge *> communication_edges() const;
    };

    /// Builds G_ext; requires validate_lsn(graph).ok() and horizon >= 1.
    ExtendedGraph build_extended_graph(const LsnGraph &graph, std::int64_t horizon);

    /// Same construction without the validity precondition; the result may contain cycles.
    ExtendedGraph build_extended_graph_unchecked(const LsnGraph &graph, std::int64_t horizon);

    struct AcyclicityResult
    {
        // Topological order of the event nodes (⊥ and ⊤ excluded) when acyclic.
        std::vector<EventId> order;
        // Events along a dependency cycle, empty when acyclic.
        std::vector<EventId> cycle;

        [[nodiscard]] bool acyclic() const noexcept { return cycle.empty(); }
    };

    AcyclicityResult check_acyclic(const ExtendedGraph &ext);

    /// Graphviz-style text: one `"a" -> "b" [kind=...];` line per edge.
    void write_dot(std::ostream &os, const ExtendedGraph &ext, const LsnGraph &graph);
}
