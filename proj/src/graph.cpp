#include "lsn/graph.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

namespace lsn
{
    std::optional<EdgeId> LsnGraph::find_edge(MachineId src, MachineId dst) const
    {
        for (std::size_t e = 0; e < edges.size(); ++e)
        {
            if (edges[e].src == src && edges[e].dst == dst)
            {
                return static_cast<EdgeId>(e);
            }
        }
        return std::nullopt;
    }

    std::optional<MachineId> LsnGraph::find_machine(std::string_view name) const
    {
        for (std::size_t i = 0; i < names.size(); ++i)
        {
            if (names[i] == name)
            {
                return static_cast<MachineId>(i);
            }
        }
        return std::nullopt;
    }

    const char *to_string(ViolationKind k) noexcept
    {
        switch (k)
        {
        case ViolationKind::SelfLoop:
            return "self-loop";
        case ViolationKind::NonpositiveCycle:
            return "nonpositive-cycle";
        case ViolationKind::DuplicateEdge:
            return "duplicate-edge";
        }
        return "unknown";
    }

    namespace
    {
        std::string describe_cycle(const LsnGraph &g, const std::vector<MachineId> &cycle, std::int64_t sum)
        {
            std::ostringstream os;
            for (MachineId v : cycle)
            {
                os << g.names[v] << "->";
            }
            os << g.names[cycle.front()] << " (sum " << sum << ")";
            return os.str();
        }

        // Simple cycles through their smallest vertex, restricted to edges that
        // pass basic structural checks. Stops once `cap` offending cycles are found.
        class CycleEnumerator
        {
        public:
            CycleEnumerator(const LsnGraph &g, std::size_t cap) : g_(g), cap_(cap), adj_(g.size())
            {
                for (const auto &e : g.edges)
                {
                    if (e.src != e.dst)
                    {
                        adj_[e.src].push_back({e.dst, e.lambda});
                    }
                }
                for (auto &a : adj_)
                {
                    std::sort(a.begin(), a.end());
                    a.erase(std::unique(a.begin(), a.end(), [](auto x, auto y)
                                        { return x.first == y.first; }),
                            a.end());
                }
            }

            std::vector<std::pair<std::vector<MachineId>, std::int64_t>> run(bool &truncated)
            {
                on_path_.assign(g_.size(), false);
                for (MachineId s = 0; s < g_.size() && !full(); ++s)
                {
                    start_ = s;
                    path_ = {s};
                    on_path_[s] = true;
                    dfs(s, 0);
                    on_path_[s] = false;
                }
                truncated = full() || steps_ >= kStepLimit;
                return std::move(found_);
            }

        private:
            static constexpr std::size_t kStepLimit = 5'000'000;

            bool full() const { return found_.size() >= cap_ || steps_ >= kStepLimit; }

            void dfs(MachineId v, std::int64_t sum)
            {
                for (auto [w, lam] : adj_[v])
                {
                    if (full())
                    {
                        return;
                    }
                    ++steps_;
                    if (w == start_)
                    {
                        if (sum + lam <= 0)
                        {
                            found_.emplace_back(path_, sum + lam);
                        }
                    }
                    else if (w > start_ && !on_path_[w])
                    {
                        on_path_[w] = true;
                        path_.push_back(w);
                        dfs(w, sum + lam);
                        path_.pop_back();
                        on_path_[w] = false;
                    }
                }
            }

            const LsnGraph &g_;
            std::size_t cap_;
            std::vector<std::vector<std::pair<MachineId, std::int64_t>>> adj_;
            std::vector<bool> on_path_;
            std::vector<MachineId> path_;
            MachineId start_ = 0;
            std::size_t steps_ = 0;
            std::vector<std::pair<std::vector<MachineId>, std::int64_t>> found_;
        };
    }

    std::optional<std::vector<MachineId>> find_nonpositive_cycle(const LsnGraph &graph)
    {
        // A simple cycle of k <= V edges has sum S <= 0 iff S*(V+1) - k < 0, so a
        // negative cycle under w = λ*(V+1) - 1 is exactly a non-positive λ cycle.
        const std::size_t n = graph.size();
        if (n == 0)
        {
            return std::nullopt;
        }
        const std::int64_t scale = static_cast<std::int64_t>(n) + 1;
        std::vector<std::int64_t> dist(n, 0);
        std::vector<std::int64_t> pred(n, -1);
        std::int64_t relaxed = -1;
        for (std::size_t round = 0; round < n; ++round)
        {
            relaxed = -1;
            for (const auto &e : graph.edges)
            {
                if (e.src == e.dst)
                {
                    continue;
                }
                const std::int64_t w = e.lambda * scale - 1;
                if (dist[e.src] + w < dist[e.dst])
                {
                    dist[e.dst] = dist[e.src] + w;
                    pred[e.dst] = e.src;
                    relaxed = e.dst;
                }
            }
            if (relaxed < 0)
            {
                return std::nullopt;
            }
        }
        // Still relaxing after n rounds: walk back n steps to land on the cycle.
        auto v = static_cast<MachineId>(relaxed);
        for (std::size_t i = 0; i < n; ++i)
        {
            v = static_cast<MachineId>(pred[v]);
        }
        std::vector<MachineId> cycle{v};
        for (auto u = static_cast<MachineId>(pred[v]); u != v; u = static_cast<MachineId>(pred[u]))
        {
            cycle.push_back(u);
        }
        std::reverse(cycle.begin(), cycle.end());
        return cycle;
    }

    ValidationReport validate_lsn(const LsnGraph &graph, std::size_t cycle_cap)
    {
        ValidationReport report;
        std::map<std::pair<MachineId, MachineId>, int> seen;
        for (const auto &e : graph.edges)
        {
            if (e.src >= graph.size() || e.dst >= graph.size())
            {
                throw GraphError("edge references machine outside 0.." + std::to_string(graph.size()));
            }
            if (e.src == e.dst)
            {
                report.violations.push_back({ViolationKind::SelfLoop, "self-loop on " + graph.names[e.src], {e.src}});
            }
            if (++seen[{e.src, e.dst}] == 2)
            {
                report.violations.push_back({ViolationKind::DuplicateEdge,
                                             "duplicate edge " + graph.names[e.src] + "->" + graph.names[e.dst],
                                             {e.src, e.dst}});
            }
        }

        if (!find_nonpositive_cycle(graph))
        {
            return report;
        }
        bool truncated = false;
        CycleEnumerator en(graph, cycle_cap);
        for (auto &[cycle, sum] : en.run(truncated))
        {
            report.violations.push_back({ViolationKind::NonpositiveCycle, describe_cycle(graph, cycle, sum), cycle});
        }
        report.truncated = truncated;
        return report;
    }

    NormalizedGraph normalize_nonnegative(const LsnGraph &graph)
    {
        if (auto bad = find_nonpositive_cycle(graph))
        {
            throw GraphError("cannot normalize: cycle " + describe_cycle(graph, *bad, cycle_delay(graph, *bad)) +
                             " is not strictly positive");
        }
        // Potentials from a virtual source joined to every vertex with weight 0:
        // d[j] <= d[i] + λ(i→j), hence λ + d[i] - d[j] >= 0.
        const std::size_t n = graph.size();
        std::vector<std::int64_t> dist(n, 0);
        for (std::size_t round = 0; round < n; ++round)
        {
            bool changed = false;
            for (const auto &e : graph.edges)
            {
                if (dist[e.src] + e.lambda < dist[e.dst])
                {
                    dist[e.dst] = dist[e.src] + e.lambda;
                    changed = true;
                }
            }
            if (!changed)
            {
                break;
            }
        }
        NormalizedGraph out{graph, dist};
        for (auto &e : out.graph.edges)
        {
            e.lambda += dist[e.src] - dist[e.dst];
        }
        return out;
    }

    std::int64_t cumulative_path_delay(const LsnGraph &graph, std::span<const MachineId> path)
    {
        std::int64_t sum = 0;
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
        {
            auto e = graph.find_edge(path[i], path[i + 1]);
            if (!e)
            {
                auto name = [&](MachineId m)
                { return m < graph.size() ? graph.names[m] : std::to_string(m); };
                throw GraphError("no edge " + name(path[i]) + "->" + name(path[i + 1]));
            }
            sum += graph.edges[*e].lambda;
        }
        return sum;
    }

    std::int64_t cycle_delay(const LsnGraph &graph, std::span<const MachineId> cycle)
    {
        if (cycle.empty())
        {
            return 0;
        }
        std::vector<MachineId> closed(cycle.begin(), cycle.end());
        closed.push_back(cycle.front());
        return cumulative_path_delay(graph, closed);
    }

    bool on_cycle(const LsnGraph &graph, EdgeId edge)
    {
        const auto &e = graph.edges.at(edge);
        std::vector<bool> seen(graph.size(), false);
        std::vector<MachineId> stack{e.dst};
        seen[e.dst] = true;
        while (!stack.empty())
        {
            MachineId v = stack.back();
            stack.pop_back();
            if (v == e.src)
            {
                return true;
            }
            for (const auto &f : graph.edges)
            {
                if (f.src == v && !seen[f.dst])
                {
                    seen[f.dst] = true;
                    stack.push_back(f.dst);
                }
            }
        }
        return false;
    }
}
