#pragma once

#include <cstdint>

namespace nf {

// PCG32 (XSH-RR 64/32). One stream per (seed, sequence) pair; independent
// streams use distinct sequence ids.
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL, std::uint64_t seq = 1)
    {
        state_ = 0u;
        inc_ = (seq << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32()
    {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Unbiased integer in [0, bound).
    std::uint32_t next_below(std::uint32_t bound)
    {
        std::uint32_t threshold = (~bound + 1u) % bound;
        for (;;) {
            std::uint32_t r = next_u32();
            if (r >= threshold)
                return r % bound;
        }
    }

    // Uniform in [0, 1).
    float next_float()
    {
        return static_cast<float>(next_u32() >> 8) * 0x1p-24f;
    }

    double next_double()
    {
        std::uint64_t hi = next_u32();
        std::uint64_t lo = next_u32();
        return static_cast<double>((hi << 21) ^ lo) * 0x1p-53;
    }

    // Uniform in [lo, hi).
    template <typename S>
    S uniform(S lo, S hi)
    {
        if constexpr (sizeof(S) > 4)
            return lo + (hi - lo) * static_cast<S>(next_double());
        else
            return lo + (hi - lo) * static_cast<S>(next_float());
    }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

} // namespace nf
