#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>

namespace lsn
{
    /// Simulated wall-clock time with nanosecond resolution.
    ///
    /// Integer arithmetic keeps deadline equality exact, so tie-breaking never
    /// depends on accumulated rounding.
    struct SimTime
    {
        std::int64_t ns = 0;

        static constexpr SimTime from_ns(std::int64_t v) noexcept { return SimTime{v}; }
        static SimTime from_seconds(double s) noexcept { return SimTime{static_cast<std::int64_t>(std::llround(s * 1e9))}; }
        static constexpr SimTime max() noexcept { return SimTime{std::numeric_limits<std::int64_t>::max()}; }

        [[nodiscard]] constexpr double seconds() const noexcept { return static_cast<double>(ns) / 1e9; }

        constexpr auto operator<=>(const SimTime &) const noexcept = default;

        constexpr SimTime &operator+=(SimTime o) noexcept
        {
            ns += o.ns;
            return *this;
        }
        constexpr SimTime &operator-=(SimTime o) noexcept
        {
            ns -= o.ns;
            return *this;
        }
        friend constexpr SimTime operator+(SimTime a, SimTime b) noexcept { return SimTime{a.ns + b.ns}; }
        friend constexpr SimTime operator-(SimTime a, SimTime b) noexcept { return SimTime{a.ns - b.ns}; }
    };

    /// Tick period for a frequency in Hz, rounded to the nearest nanosecond.
    inline SimTime period_of(double hz) noexcept { return SimTime::from_ns(static_cast<std::int64_t>(std::llround(1e9 / hz))); }

    inline std::ostream &operator<<(std::ostream &os, SimTime t) { return os << t.seconds() << "s"; }
}
