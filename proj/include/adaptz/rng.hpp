#pragma once

#include <array>
#include <cstdint>

namespace adaptz {

// Philox4x32-10 block function (Salmon et al. counter-based generator).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

enum class StreamPurpose : std::uint32_t { Contexts = 1, Arms = 2, Noise = 3, Truth = 4 };

// Sequential view of the Philox output for key = seed and counter
// {block_lo, block_hi, purpose, 0}. Distinct (seed, purpose) pairs never
// share a counter, so streams are independent of thread scheduling.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, StreamPurpose purpose);

    std::uint64_t next_u64();
    // Uniform on the open interval (0, 1): ((u >> 11) + 0.5) 2^-53.
    double uniform();
    // Standard normal by Box-Muller.
    double normal();

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t purpose_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int used_ = 4;  // 32-bit words consumed from buf_
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace adaptz
