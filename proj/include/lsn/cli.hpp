#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lsn::cli
{
    enum ExitCode : int
    {
        Ok = 0,
        ConfigFailure = 1,
        RuntimeAbort = 2,
        CheckFailure = 3,
    };

    /// Runs `lsnsim <subcommand> ...`. args[0] is the program name.
    int main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
}
