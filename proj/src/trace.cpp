#include "lsn/trace.hpp"

#include <chrono>
#include <ostream>
#include <stdexcept>

namespace lsn
{
    const char *to_string(RecordKind k) noexcept
    {
        switch (k)
        {
        case RecordKind::Fire:
            return "fire";
        case RecordKind::Stutter:
            return "stutter";
        case RecordKind::Arrival:
            return "arrival";
        }
        return "?";
    }

    std::vector<std::vector<Token>> output_sequence(const Trace &t, MachineId machine)
    {
        std::vector<std::vector<Token>> seq;
        for (const auto &r : t.records)
        {
            if (r.kind != RecordKind::Fire || r.machine != machine)
            {
                continue;
            }
            std::vector<Token> out;
            out.reserve(r.produced.size());
            for (const auto &f : r.produced)
            {
                out.push_back(f.payload);
            }
            seq.push_back(std::move(out));
        }
        return seq;
    }

    DeterminacyVerdict compare_traces(const Trace &a, const Trace &b)
    {
        if (a.meta.topology_hash != b.meta.topology_hash || a.meta.machines != b.meta.machines)
        {
            throw std::invalid_argument("traces come from different topologies");
        }
        DeterminacyVerdict verdict;
        for (MachineId m = 0; m < a.meta.machines.size(); ++m)
        {
            auto sa = output_sequence(a, m);
            auto sb = output_sequence(b, m);
            const std::size_t n = std::min(sa.size(), sb.size());
            for (std::size_t k = 0; k < n; ++k)
            {
                if (sa[k] != sb[k])
                {
                    verdict.divergence = Divergence{m, k, sa[k], sb[k]};
                    return verdict;
                }
            }
            verdict.compared_firings += n;
        }
        return verdict;
    }

    namespace
    {
        void write_frames(std::ostream &os, const std::vector<FrameRef> &frames)
        {
            for (std::size_t i = 0; i < frames.size(); ++i)
            {
                if (i)
                {
                    os << ';';
                }
                os << frames[i].edge << ':' << frames[i].seq << ':' << frames[i].payload;
            }
        }

        nlohmann::json frames_json(const std::vector<FrameRef> &frames)
        {
            auto arr = nlohmann::json::array();
            for (const auto &f : frames)
            {
                arr.push_back({f.edge, f.seq, f.payload});
            }
            return arr;
        }

        nlohmann::json meta_json(const Trace &t, bool timestamp)
        {
            nlohmann::json j{{"config_hash", t.meta.config_hash},
                             {"topology_hash", t.meta.topology_hash},
                             {"backend", to_string(t.meta.backend)},
                             {"duration_ns", t.meta.duration.ns},
                             {"machines", t.meta.machines}};
            j["seed"] = t.meta.seed ? nlohmann::json(*t.meta.seed) : nlohmann::json(nullptr);
            auto edges = nlohmann::json::array();
            for (const auto &e : t.meta.edges)
            {
                edges.push_back({{"src", e.src}, {"dst", e.dst}, {"link_delay_ns", e.link_delay.ns}, {"capacity", e.capacity}, {"lambda", e.lambda}});
            }
            j["edges"] = std::move(edges);
            if (t.abort)
            {
                j["abort"] = {{"reason", t.abort->reason}, {"time_ns", t.abort->time.ns}, {"machine", t.abort->machine}, {"edge", t.abort->edge}, {"occupancy", t.abort->occupancy}, {"detail", t.abort->detail}};
            }
            if (timestamp)
            {
                j["created_unix_s"] = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
            }
            return j;
        }
    }

    void write_csv(std::ostream &os, const Trace &t, bool timestamp)
    {
        os << "# config_hash=" << t.meta.config_hash << " topology_hash=" << t.meta.topology_hash
           << " backend=" << to_string(t.meta.backend) << " seed=";
        if (t.meta.seed)
        {
            os << *t.meta.seed;
        }
        else
        {
            os << "none";
        }
        if (timestamp)
        {
            os << " created_unix_s=" << std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
        }
        os << '\n';
        os << "time_ns,kind,machine,theta_after,omega,consumed,produced,emitted_ns,arrived";
        for (std::size_t e = 0; e < t.meta.edges.size(); ++e)
        {
            os << ",beta" << e;
        }
        for (std::size_t e = 0; e < t.meta.edges.size(); ++e)
        {
            os << ",gamma" << e;
        }
        os << '\n';
        for (const auto &r : t.records)
        {
            os << r.time.ns << ',' << to_string(r.kind) << ',' << r.machine << ',' << r.theta_after << ',' << r.omega << ',';
            write_frames(os, r.consumed);
            os << ',';
            write_frames(os, r.produced);
            os << ',' << r.emitted.ns << ',';
            if (r.arrived)
            {
                write_frames(os, {*r.arrived});
            }
            for (auto b : r.beta)
            {
                os << ',' << b;
            }
            for (auto g : r.gamma)
            {
                os << ',' << g;
            }
            os << '\n';
        }
    }

    void write_jsonl(std::ostream &os, const Trace &t, bool timestamp)
    {
        os << meta_json(t, timestamp).dump() << '\n';
        for (const auto &r : t.records)
        {
            nlohmann::json j{{"t", r.time.ns},
                             {"kind", to_string(r.kind)},
                             {"machine", r.machine},
                             {"theta", r.theta_after},
                             {"omega", r.omega},
                             {"consumed", frames_json(r.consumed)},
                             {"produced", frames_json(r.produced)},
                             {"emitted", r.emitted.ns},
                             {"beta", r.beta},
                             {"gamma", r.gamma}};
            if (r.arrived)
            {
                j["arrived"] = {r.arrived->edge, r.arrived->seq, r.arrived->payload};
            }
            os << j.dump() << '\n';
        }
    }
}
