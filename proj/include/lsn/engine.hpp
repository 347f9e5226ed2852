#pragma once

#include "lsn/config.hpp"
#include "lsn/program.hpp"
#include "lsn/time.hpp"
#include "lsn/trace.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsn
{
    enum class DeadlineKind : std::uint8_t
    {
        FrameArrival = 0, // sorts first at equal time
        MachineTick = 1,
    };

    /// Ordered lexicographically by (time, kind, subject, seq). `subject` is the
    /// machine for ticks and the edge for arrivals; `seq` is the frame number.
    struct Deadline
    {
        SimTime time;
        DeadlineKind kind = DeadlineKind::MachineTick;
        std::uint32_t subject = 0;
        std::int64_t seq = 0;

        constexpr auto operator<=>(const Deadline &) const noexcept = default;
    };

    class DeadlineQueue
    {
    public:
        void push(const Deadline &d) { heap_.push(d); }
        /// Minimum pending deadline. Precondition: !empty().
        [[nodiscard]] const Deadline &next_deadline() const { return heap_.top(); }
        Deadline pop()
        {
            Deadline d = heap_.top();
            heap_.pop();
            return d;
        }
        [[nodiscard]] bool empty() const noexcept { return heap_.empty(); }
        [[nodiscard]] std::size_t size() const noexcept { return heap_.size(); }

    private:
        std::priority_queue<Deadline, std::vector<Deadline>, std::greater<>> heap_;
    };

    struct Frame
    {
        std::int64_t seq = 0;
        Token payload = 0;
        SimTime emitted;
    };

    struct InFlightFrame
    {
        Frame frame;
        SimTime arrival;
    };

    struct Channel
    {
        EdgeId id = 0;
        MachineId src = 0;
        MachineId dst = 0;
        SimTime link_delay;
        SimTime reverse_delay;
        std::int64_t capacity = 0; // 0: unbounded
        std::int64_t initial_fill = 0;
        std::int64_t initial_link = 0;
        std::int64_t lambda = 0;
        std::deque<Frame> buffer;
        std::deque<InFlightFrame> link;

        [[nodiscard]] std::int64_t beta() const noexcept { return static_cast<std::int64_t>(buffer.size()); }
        [[nodiscard]] std::int64_t gamma() const noexcept { return static_cast<std::int64_t>(link.size()); }
    };

    struct Machine
    {
        MachineId id = 0;
        std::string name;
        double nominal_hz = 1.0;
        double omega = 1.0;
        std::uint64_t theta = 0;
        std::uint64_t ticks = 0; // fired + stuttered
        std::vector<EdgeId> inputs;
        std::vector<EdgeId> outputs;
        std::unique_ptr<MachineProgram> program;
        SimTime grid;      // unperturbed schedule point of the pending tick
        SimTime next_tick; // grid + jitter
        std::vector<SimTime> fire_times;
        std::mt19937_64 rng;
    };

    /// Mutable state of one run: machines, channels and the current time.
    struct Network
    {
        std::vector<Machine> machines;
        std::vector<Channel> channels;
        SimTime now;

        /// Firings of `m` processed at or before `t`.
        [[nodiscard]] std::uint64_t theta_at(MachineId m, SimTime t) const;
        /// β + γ + θ_dst − θ_src.
        [[nodiscard]] std::int64_t channel_lambda(EdgeId e) const;
    };

    class SimulationAbort : public std::runtime_error
    {
    public:
        explicit SimulationAbort(AbortInfo info) : std::runtime_error(info.reason + ": " + info.detail), info_(std::move(info)) {}
        [[nodiscard]] const AbortInfo &info() const noexcept { return info_; }

    private:
        AbortInfo info_;
    };

    enum class TickDecision
    {
        Fire,
        Stutter,
    };

    /// Firing rule and channel discipline of one semantics.
    class Backend
    {
    public:
        virtual ~Backend() = default;
        [[nodiscard]] virtual Model model() const = 0;
        /// Pre-fills buffers and links and sets each channel's λ.
        virtual void initialize(Network &net) = 0;
        /// May throw SimulationAbort.
        virtual TickDecision decide(const Network &net, MachineId m, SimTime now) = 0;
        virtual void after_fire(Network &, MachineId, SimTime) {}
        /// Called before a frame enters the receiver buffer. May throw SimulationAbort.
        virtual void before_arrival(const Network &, EdgeId, SimTime) {}
        /// Delay between the firing instant and the frames leaving the machine.
        [[nodiscard]] virtual SimTime emit_delay(const Machine &) const { return SimTime{}; }
    };

    using EventObserver = std::function<void(const Network &, const Deadline &)>;

    struct EngineOptions
    {
        std::optional<JitterSpec> jitter;
        std::optional<FrameDrop> drop_frame;
        EventObserver observer;
        bool record_arrivals = true;
    };

    /// Deadline-driven event loop. Processes deadlines strictly before the
    /// duration in (time, kind, subject, seq) order.
    class Engine
    {
    public:
        Engine(Network net, std::unique_ptr<Backend> backend, TraceMeta meta, EngineOptions options = {});

        Trace run(SimTime duration);

        /// Processes a tick of `m` at the current time without scheduling the next one.
        TickDecision tick(MachineId m);

        [[nodiscard]] const Network &network() const noexcept { return net_; }
        [[nodiscard]] Network &network() noexcept { return net_; }
        [[nodiscard]] const Backend &backend() const noexcept { return *backend_; }
        [[nodiscard]] const DeadlineQueue &queue() const noexcept { return queue_; }

    private:
        void fire(Machine &m);
        void deliver(Channel &c, const Frame &f);
        void handle_arrival(const Deadline &d);
        void schedule_tick(Machine &m, bool first);
        void record(RecordKind kind, MachineId m, std::vector<FrameRef> consumed = {}, std::vector<FrameRef> produced = {},
                    SimTime emitted = {}, std::optional<FrameRef> arrived = std::nullopt);

        Network net_;
        std::unique_ptr<Backend> backend_;
        EngineOptions options_;
        DeadlineQueue queue_;
        Trace trace_;
        std::vector<Token> in_buf_;
        std::vector<Token> out_buf_;
    };

    /// Machines and channels for a runtime topology, with programs from `factory`
    /// (LaggedSum seeded with initial_state or index + 1 when empty).
    Network build_network(const Topology &topology, const ProgramFactory &factory = {});
}
