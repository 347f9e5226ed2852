#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>

namespace lsn
{
    using Token = std::uint64_t;

    /// A synchronous Mealy machine f : X^n × S -> X^m × S. Implementations must
    /// be deterministic; the state lives inside the object.
    class MachineProgram
    {
    public:
        virtual ~MachineProgram() = default;
        virtual void step(std::span<const Token> inputs, std::span<Token> outputs) = 0;
        [[nodiscard]] virtual std::unique_ptr<MachineProgram> clone() const = 0;
    };

    /// output = (sum of inputs + state) mod 2^64 on every output; state = output.
    class LaggedSum final : public MachineProgram
    {
    public:
        explicit LaggedSum(Token initial_state) : state_(initial_state) {}

        void step(std::span<const Token> inputs, std::span<Token> outputs) override
        {
            Token acc = state_;
            for (Token x : inputs)
            {
                acc += x;
            }
            state_ = acc;
            for (Token &y : outputs)
            {
                y = acc;
            }
        }

        [[nodiscard]] std::unique_ptr<MachineProgram> clone() const override { return std::make_unique<LaggedSum>(*this); }
        [[nodiscard]] Token state() const noexcept { return state_; }

    private:
        Token state_;
    };

    /// Builds the program for a machine given (index, in-degree, out-degree).
    using ProgramFactory = std::function<std::unique_ptr<MachineProgram>(std::uint32_t, std::size_t, std::size_t)>;
}
