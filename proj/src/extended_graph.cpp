#include "lsn/extended_graph.hpp"

#include <algorithm>
#include <ostream>
#include <queue>

namespace lsn
{
    std::vector<const ExtEdge *> ExtendedGraph::communication_edges() const
    {
        std::vector<const ExtEdge *> out;
        for (const auto &e : edges)
        {
            if (e.kind == ExtEdgeKind::Communication)
            {
                out.push_back(&e);
            }
        }
        return out;
    }

    ExtendedGraph build_extended_graph_unchecked(const LsnGraph &graph, std::int64_t horizon)
    {
        if (horizon < 1)
        {
            throw GraphError("horizon must be >= 1");
        }
        ExtendedGraph ext;
        ext.machine_count = graph.size();
        ext.horizon = horizon;
        for (MachineId m = 0; m < graph.size(); ++m)
        {
            ext.edges.push_back({ExtendedGraph::bottom, ext.node_of({m, 0}), ExtEdgeKind::Initial, -1});
            for (std::int64_t n = 0; n + 1 < horizon; ++n)
            {
                ext.edges.push_back({ext.node_of({m, n}), ext.node_of({m, n + 1}), ExtEdgeKind::Computation, -1});
            }
            ext.edges.push_back({ext.node_of({m, horizon - 1}), ExtendedGraph::top, ExtEdgeKind::Final, -1});
        }
        for (std::size_t id = 0; id < graph.edges.size(); ++id)
        {
            const auto &e = graph.edges[id];
            const auto eid = static_cast<std::int64_t>(id);
            for (std::int64_t n = 0; n < horizon; ++n)
            {
                const std::int64_t m = n + e.lambda;
                if (m >= 0 && m < horizon)
                {
                    ext.edges.push_back({ext.node_of({e.src, n}), ext.node_of({e.dst, m}), ExtEdgeKind::Communication, eid});
                }
            }
            // Consumer events whose producer index would be negative take their
            // input from the initial conditions held by ⊥.
            for (std::int64_t m = 0; m < std::min(e.lambda, horizon); ++m)
            {
                ext.edges.push_back({ExtendedGraph::bottom, ext.node_of({e.dst, m}), ExtEdgeKind::Initial, eid});
            }
        }
        return ext;
    }

    ExtendedGraph build_extended_graph(const LsnGraph &graph, std::int64_t horizon)
    {
        auto report = validate_lsn(graph, 1);
        if (!report.ok())
        {
            throw GraphError("extended graph requires a valid LSN: " + report.violations.front().detail);
        }
        return build_extended_graph_unchecked(graph, horizon);
    }

    AcyclicityResult check_acyclic(const ExtendedGraph &ext)
    {
        const std::size_t n = ext.node_count();
        std::vector<std::vector<std::size_t>> succ(n);
        std::vector<std::size_t> indeg(n, 0);
        for (const auto &e : ext.edges)
        {
            succ[e.from].push_back(e.to);
            ++indeg[e.to];
        }

        // Kahn's algorithm; the min-heap makes the order reproducible.
        std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
        for (std::size_t v = 0; v < n; ++v)
        {
            if (indeg[v] == 0)
            {
                ready.push(v);
            }
        }
        AcyclicityResult result;
        std::size_t visited = 0;
        while (!ready.empty())
        {
            const std::size_t v = ready.top();
            ready.pop();
            ++visited;
            if (ext.is_event(v))
            {
                result.order.push_back(ext.event_of(v));
            }
            for (std::size_t w : succ[v])
            {
                if (--indeg[w] == 0)
                {
                    ready.push(w);
                }
            }
        }
        if (visited == n)
        {
            return result;
        }

        // Every unvisited node has an unvisited predecessor; walking predecessors
        // must revisit a node, which closes a cycle.
        std::vector<std::size_t> pred(n, n);
        for (const auto &e : ext.edges)
        {
            if (indeg[e.from] > 0 && indeg[e.to] > 0)
            {
                pred[e.to] = e.from;
            }
        }
        std::size_t v = 0;
        while (indeg[v] == 0)
        {
            ++v;
        }
        std::vector<std::size_t> mark(n, 0);
        std::vector<std::size_t> walk;
        while (mark[v] == 0)
        {
            mark[v] = walk.size() + 1;
            walk.push_back(v);
            v = pred[v];
        }
        result.order.clear();
        for (std::size_t i = mark[v] - 1; i < walk.size(); ++i)
        {
            result.cycle.push_back(ext.event_of(walk[i]));
        }
        std::reverse(result.cycle.begin(), result.cycle.end());
        return result;
    }

    void write_dot(std::ostream &os, const ExtendedGraph &ext, const LsnGraph &graph)
    {
        auto label = [&](std::size_t node) -> std::string
        {
            if (node == ExtendedGraph::bottom)
            {
                return "bottom";
            }
            if (node == ExtendedGraph::top)
            {
                return "top";
            }
            auto ev = ext.event_of(node);
            return graph.names[ev.machine] + "," + std::to_string(ev.count);
        };
        auto kind = [](ExtEdgeKind k)
        {
            switch (k)
            {
            case ExtEdgeKind::Computation:
                return "computation";
            case ExtEdgeKind::Communication:
                return "communication";
            case ExtEdgeKind::Initial:
                return "initial";
            case ExtEdgeKind::Final:
                return "final";
            }
            return "?";
        };
        os << "digraph G_ext {\n";
        for (const auto &e : ext.edges)
        {
            os << "  \"" << label(e.from) << "\" -> \"" << label(e.to) << "\" [kind=" << kind(e.kind);
            if (e.lsn_edge >= 0)
            {
                os << ", lambda=" << graph.edges[static_cast<std::size_t>(e.lsn_edge)].lambda;
            }
            os << "];\n";
        }
        os << "}\n";
    }
}
