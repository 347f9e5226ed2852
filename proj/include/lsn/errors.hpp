#pragma once

#include <stdexcept>
#include <string>

namespace lsn
{
    /// Malformed topology or simulation configuration.
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// A graph-level precondition does not hold (e.g. a non-positive cycle).
    class GraphError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}
