#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace lamperti {

// Philox4x32-10 counter-based generator. The 128-bit counter is
// (block, substream, stream_lo, stream_hi); the key is the seed.
// Identical (seed, stream, substream) give identical sequences.
class RngStream {
public:
    using result_type = std::uint32_t;

    RngStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream = 0);

    RngStream substream(std::uint32_t k) const { return RngStream(seed_, stream_, k); }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return 0xFFFFFFFFu; }
    result_type operator()();

    double uniform();  // in (0,1)
    double normal();
    double exponential();

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint32_t substream_;
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int used_ = 4;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

}  // namespace lamperti
