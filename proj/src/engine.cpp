#include "lsn/engine.hpp"

#include <algorithm>
#include <cassert>

namespace lsn
{
    std::uint64_t Network::theta_at(MachineId m, SimTime t) const
    {
        const auto &h = machines[m].fire_times;
        return static_cast<std::uint64_t>(std::upper_bound(h.begin(), h.end(), t) - h.begin());
    }

    std::int64_t Network::channel_lambda(EdgeId e) const
    {
        const auto &c = channels[e];
        return c.beta() + c.gamma() + static_cast<std::int64_t>(machines[c.dst].theta) - static_cast<std::int64_t>(machines[c.src].theta);
    }

    Network build_network(const Topology &topology, const ProgramFactory &factory)
    {
        Network net;
        net.machines.resize(topology.machines.size());
        for (std::size_t i = 0; i < topology.machines.size(); ++i)
        {
            auto &m = net.machines[i];
            m.id = static_cast<MachineId>(i);
            m.name = topology.machines[i].name;
            m.nominal_hz = topology.machines[i].freq_hz;
            m.omega = m.nominal_hz;
        }
        for (std::size_t e = 0; e < topology.edges.size(); ++e)
        {
            const auto &spec = topology.edges[e];
            Channel c;
            c.id = static_cast<EdgeId>(e);
            c.src = topology.machine_index(spec.src);
            c.dst = topology.machine_index(spec.dst);
            c.link_delay = SimTime::from_seconds(spec.link_delay_s);
            c.reverse_delay = SimTime::from_seconds(spec.reverse_delay());
            net.machines[c.src].outputs.push_back(c.id);
            net.machines[c.dst].inputs.push_back(c.id);
            net.channels.push_back(std::move(c));
        }
        for (std::size_t i = 0; i < net.machines.size(); ++i)
        {
            auto &m = net.machines[i];
            if (factory)
            {
                m.program = factory(m.id, m.inputs.size(), m.outputs.size());
            }
            if (!m.program)
            {
                m.program = std::make_unique<LaggedSum>(topology.machines[i].initial_state.value_or(i + 1));
            }
        }
        return net;
    }

    Engine::Engine(Network net, std::unique_ptr<Backend> backend, TraceMeta meta, EngineOptions options)
        : net_(std::move(net)), backend_(std::move(backend)), options_(std::move(options))
    {
        trace_.meta = std::move(meta);
        backend_->initialize(net_);
        trace_.meta.edges.clear();
        for (const auto &c : net_.channels)
        {
            trace_.meta.edges.push_back({c.src, c.dst, c.link_delay, c.capacity, c.lambda});
            for (const auto &f : c.link)
            {
                queue_.push({f.arrival, DeadlineKind::FrameArrival, c.id, f.frame.seq});
            }
        }
        for (auto &m : net_.machines)
        {
            if (options_.jitter)
            {
                std::seed_seq seq{static_cast<std::uint32_t>(options_.jitter->seed), static_cast<std::uint32_t>(options_.jitter->seed >> 32), m.id};
                m.rng.seed(seq);
            }
            schedule_tick(m, true);
        }
    }

    void Engine::schedule_tick(Machine &m, bool first)
    {
        const std::int64_t eps = options_.jitter ? options_.jitter->magnitude.ns : 0;
        auto draw = [&]() -> std::int64_t
        {
            if (eps <= 0)
            {
                return 0;
            }
            return std::uniform_int_distribution<std::int64_t>(0, eps - 1)(m.rng);
        };
        if (first)
        {
            m.grid = SimTime::from_ns(draw()); // initial phase offset
        }
        else
        {
            m.grid += period_of(m.omega);
        }
        m.next_tick = m.grid + SimTime::from_ns(draw());
        queue_.push({m.next_tick, DeadlineKind::MachineTick, m.id, 0});
    }

    void Engine::record(RecordKind kind, MachineId m, std::vector<FrameRef> consumed, std::vector<FrameRef> produced, SimTime emitted,
                        std::optional<FrameRef> arrived)
    {
        TraceRecord r;
        r.time = net_.now;
        r.kind = kind;
        r.machine = m;
        r.theta_after = net_.machines[m].theta;
        r.omega = net_.machines[m].omega;
        r.consumed = std::move(consumed);
        r.produced = std::move(produced);
        r.emitted = emitted;
        r.arrived = arrived;
        r.beta.reserve(net_.channels.size());
        r.gamma.reserve(net_.channels.size());
        for (const auto &c : net_.channels)
        {
            r.beta.push_back(c.beta());
            r.gamma.push_back(c.gamma());
        }
        trace_.records.push_back(std::move(r));
    }

    void Engine::deliver(Channel &c, const Frame &f)
    {
        if (options_.drop_frame && options_.drop_frame->edge == c.id && options_.drop_frame->seq == f.seq)
        {
            return;
        }
        backend_->before_arrival(net_, c.id, net_.now);
        c.buffer.push_back(f);
    }

    void Engine::fire(Machine &m)
    {
        const SimTime now = net_.now;
        std::vector<FrameRef> consumed;
        consumed.reserve(m.inputs.size());
        in_buf_.clear();
        for (EdgeId e : m.inputs)
        {
            auto &c = net_.channels[e];
            assert(!c.buffer.empty());
            const Frame f = c.buffer.front();
            c.buffer.pop_front();
            consumed.push_back({e, f.seq, f.payload});
            in_buf_.push_back(f.payload);
        }
        out_buf_.assign(m.outputs.size(), 0);
        m.program->step(in_buf_, out_buf_);

        const SimTime emitted = now + backend_->emit_delay(m);
        const auto seq = static_cast<std::int64_t>(m.theta);
        std::vector<FrameRef> produced;
        produced.reserve(m.outputs.size());
        for (std::size_t k = 0; k < m.outputs.size(); ++k)
        {
            auto &c = net_.channels[m.outputs[k]];
            const Frame f{seq, out_buf_[k], emitted};
            produced.push_back({c.id, seq, f.payload});
            const SimTime arrival = emitted + c.link_delay;
            if (arrival == now)
            {
                deliver(c, f);
            }
            else
            {
                c.link.push_back({f, arrival});
                queue_.push({arrival, DeadlineKind::FrameArrival, c.id, seq});
            }
        }
        ++m.theta;
        m.fire_times.push_back(now);
        record(RecordKind::Fire, m.id, std::move(consumed), std::move(produced), emitted);
    }

    TickDecision Engine::tick(MachineId id)
    {
        auto &m = net_.machines[id];
        const TickDecision d = backend_->decide(net_, id, net_.now);
        ++m.ticks;
        if (d == TickDecision::Fire)
        {
            fire(m);
            backend_->after_fire(net_, id, net_.now);
            // Controllers may retune ω; keep the record consistent with the schedule.
            trace_.records.back().omega = m.omega;
        }
        else
        {
            record(RecordKind::Stutter, id);
        }
        return d;
    }

    void Engine::handle_arrival(const Deadline &d)
    {
        auto &c = net_.channels[d.subject];
        assert(!c.link.empty() && c.link.front().frame.seq == d.seq);
        const Frame f = c.link.front().frame;
        c.link.pop_front();
        const std::size_t before = c.buffer.size();
        deliver(c, f);
        if (options_.record_arrivals)
        {
            std::optional<FrameRef> arrived;
            if (c.buffer.size() != before)
            {
                arrived = FrameRef{c.id, f.seq, f.payload};
            }
            record(RecordKind::Arrival, c.dst, {}, {}, {}, arrived);
        }
    }

    Trace Engine::run(SimTime duration)
    {
        trace_.meta.duration = duration;
        try
        {
            while (!queue_.empty() && queue_.next_deadline().time < duration)
            {
                const Deadline d = queue_.pop();
                assert(d.time >= net_.now);
                net_.now = d.time;
                if (d.kind == DeadlineKind::FrameArrival)
                {
                    handle_arrival(d);
                }
                else
                {
                    tick(d.subject);
                    schedule_tick(net_.machines[d.subject], false);
                }
                if (options_.observer)
                {
                    options_.observer(net_, d);
                }
            }
        }
        catch (const SimulationAbort &abort)
        {
            trace_.abort = abort.info();
        }
        return std::move(trace_);
    }
}
