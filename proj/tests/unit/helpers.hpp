#pragma once

#include "lsn/config.hpp"
#include "lsn/trace.hpp"

#include "../support/oracles.hpp"

#include <filesystem>
#include <initializer_list>
#include <string>
#include <tuple>

namespace testing
{
    inline const std::filesystem::path config_dir = LSN_CONFIG_DIR;
    inline const std::filesystem::path data_dir = LSN_TEST_DATA_DIR;

    struct E
    {
        std::string src, dst;
        double delay = 0.0;
        std::optional<std::int64_t> marking = std::nullopt;
        std::optional<std::int64_t> capacity = std::nullopt;
    };

    inline lsn::SimConfig make_config(std::initializer_list<std::pair<std::string, double>> machines, std::initializer_list<E> edges,
                                      lsn::Model model = lsn::Model::Ffp)
    {
        lsn::SimConfig c;
        c.model = model;
        for (const auto &[name, f] : machines)
        {
            c.topology.machines.push_back({name, f, std::nullopt});
        }
        for (const auto &e : edges)
        {
            lsn::EdgeSpec s;
            s.src = e.src;
            s.dst = e.dst;
            s.link_delay_s = e.delay;
            s.initial_marking = e.marking;
            s.capacity = e.capacity;
            c.topology.edges.push_back(s);
        }
        return c;
    }

    inline lsn::LsnGraph make_graph(std::size_t n, std::initializer_list<std::tuple<lsn::MachineId, lsn::MachineId, std::int64_t>> edges)
    {
        lsn::LsnGraph g;
        for (std::size_t i = 0; i < n; ++i)
        {
            g.names.push_back(std::string(1, static_cast<char>('a' + i)));
        }
        for (auto [s, d, l] : edges)
        {
            g.edges.push_back({s, d, l});
        }
        return g;
    }

    // Fire records whose outputs differ from the recurrence oracle; machines without
    // outputs are skipped since their values never leave them.
    inline std::size_t recurrence_mismatches(const lsn::Trace &t, const lsn::SimConfig &c, std::size_t *checked = nullptr)
    {
        const std::size_t n = t.meta.machines.size();
        std::vector<std::tuple<lsn::MachineId, lsn::MachineId, std::int64_t>> edges;
        for (const auto &e : t.meta.edges)
        {
            edges.emplace_back(e.src, e.dst, e.lambda);
        }
        std::vector<std::uint64_t> init(n);
        std::size_t most = 0;
        for (std::size_t m = 0; m < n; ++m)
        {
            init[m] = c.topology.machines[m].initial_state.value_or(m + 1);
            most = std::max(most, lsn::output_sequence(t, static_cast<lsn::MachineId>(m)).size());
        }
        const auto y = oracle::lagged_sum_outputs(n, edges, init, most);
        std::size_t bad = 0;
        for (std::size_t m = 0; m < n; ++m)
        {
            const auto seq = lsn::output_sequence(t, static_cast<lsn::MachineId>(m));
            for (std::size_t k = 0; k < seq.size(); ++k)
            {
                for (auto v : seq[k])
                {
                    bad += v != y[m][k];
                    if (checked)
                    {
                        ++*checked;
                    }
                }
            }
        }
        return bad;
    }
}
