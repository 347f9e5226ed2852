#pragma once

#include "lsn/config.hpp"
#include "lsn/graph.hpp"
#include "lsn/program.hpp"
#include "lsn/time.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lsn
{
    enum class RecordKind : std::uint8_t
    {
        Fire,
        Stutter,
        Arrival,
    };

    const char *to_string(RecordKind k) noexcept;

    /// A frame on an edge. `seq` is the producer's firing index; pre-loaded
    /// frames carry negative indices. Sequence numbers never reach programs.
    struct FrameRef
    {
        EdgeId edge = 0;
        std::int64_t seq = 0;
        Token payload = 0;

        friend bool operator==(const FrameRef &, const FrameRef &) = default;
    };

    struct TraceRecord
    {
        SimTime time;
        RecordKind kind = RecordKind::Fire;
        MachineId machine = 0; // the firing machine, or the receiver for arrivals
        std::uint64_t theta_after = 0;
        double omega = 0.0;
        std::vector<FrameRef> consumed; // one per input edge, in input order
        std::vector<FrameRef> produced; // one per output edge, in output order
        SimTime emitted;                // when `produced` frames leave the machine
        std::optional<FrameRef> arrived;
        std::vector<std::int64_t> beta;  // per edge, after the event
        std::vector<std::int64_t> gamma; // per edge, after the event
    };

    struct TraceEdge
    {
        MachineId src = 0;
        MachineId dst = 0;
        SimTime link_delay;
        std::int64_t capacity = 0; // 0: unbounded
        std::int64_t lambda = 0;   // logical delay fixed by the initial state
    };

    struct TraceMeta
    {
        std::uint64_t config_hash = 0;
        std::uint64_t topology_hash = 0;
        Model backend = Model::Ffp;
        std::optional<std::uint64_t> seed;
        SimTime duration;
        std::vector<std::string> machines;
        std::vector<double> nominal_hz;
        std::vector<TraceEdge> edges;
    };

    struct AbortInfo
    {
        std::string reason; // "underflow", "overflow", "queue-cap"
        SimTime time;
        MachineId machine = 0;
        EdgeId edge = 0;
        std::int64_t occupancy = 0;
        std::string detail;
    };

    struct Trace
    {
        TraceMeta meta;
        std::vector<TraceRecord> records;
        std::optional<AbortInfo> abort;

        [[nodiscard]] bool aborted() const noexcept { return abort.has_value(); }
    };

    struct Divergence
    {
        MachineId machine = 0;
        std::size_t firing = 0;
        std::vector<Token> left;
        std::vector<Token> right;
    };

    struct DeterminacyVerdict
    {
        std::optional<Divergence> divergence;
        std::size_t compared_firings = 0;

        [[nodiscard]] bool ok() const noexcept { return !divergence.has_value(); }
    };

    /// Per-machine output token sequences, compared up to the shorter length.
    /// Throws std::invalid_argument when the traces come from different topologies.
    DeterminacyVerdict compare_traces(const Trace &a, const Trace &b);

    /// Output vectors of each fire record of `machine`, in firing order.
    std::vector<std::vector<Token>> output_sequence(const Trace &t, MachineId machine);

    /// First line is a `# key=value ...` metadata header; then one row per record.
    /// `timestamp` adds a wall-clock creation time to the header.
    void write_csv(std::ostream &os, const Trace &t, bool timestamp = false);
    /// One JSON object per line; the first line holds the metadata.
    void write_jsonl(std::ostream &os, const Trace &t, bool timestamp = false);
}
