#pragma once

#include "lsn/config.hpp"
#include "lsn/engine.hpp"
#include "lsn/trace.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace lsn
{
    struct RunOptions
    {
        ProgramFactory programs;
        EventObserver observer;
        bool record_arrivals = true;
    };

    /// Edges the backend actually runs: bittide adds reverse links unless disabled.
    Topology runtime_topology(const SimConfig &config, Model model);

    /// Initial marking per runtime edge: `initial_marking` (default 0) for KPN and
    /// FFP, the delay-masking heuristic for LSFP, then `marking_overrides`.
    std::vector<std::int64_t> resolve_markings(const SimConfig &config, Model model);

    /// Capacity per runtime edge for FFP/LSFP: configured value or 2 × marking + 2.
    std::vector<std::int64_t> resolve_capacities(const SimConfig &config, Model model);

    std::unique_ptr<Engine> make_engine(const SimConfig &config, Model model, std::optional<JitterSpec> jitter, const RunOptions &options = {});

    /// Runs `model` over `config` until `duration`. Aborts (bittide under/overflow,
    /// KPN queue cap) end the run early and are reported in Trace::abort.
    Trace run(const SimConfig &config, Model model, SimTime duration, std::optional<JitterSpec> jitter = std::nullopt,
              const RunOptions &options = {});

    /// Uses the config's own model, duration and jitter.
    Trace run(const SimConfig &config, const RunOptions &options = {});
}
