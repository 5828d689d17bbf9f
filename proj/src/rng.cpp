#include "lamperti/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace lamperti {

namespace {

constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream)
    : seed_(seed), stream_(stream), substream_(substream) {}

void RngStream::refill() {
    if (block_ == 0xFFFFFFFFu) throw std::runtime_error("rng stream exhausted");
    std::array<std::uint32_t, 4> c{block_++, substream_, static_cast<std::uint32_t>(stream_),
                                   static_cast<std::uint32_t>(stream_ >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_), k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int r = 0; r < 10; ++r) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(M0, c[0], hi0, lo0);
        mulhilo(M1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
        k0 += W0;
        k1 += W1;
    }
    buf_ = c;
    used_ = 0;
}

RngStream::result_type RngStream::operator()() {
    if (used_ == 4) refill();
    return buf_[used_++];
}

double RngStream::uniform() {
    for (;;) {
        std::uint64_t hi = (*this)(), lo = (*this)();
        std::uint64_t bits = ((hi << 32) | lo) >> 11;
        if (bits != 0) return static_cast<double>(bits) * 0x1.0p-53;
    }
}

double RngStream::normal() { return gauss_(*this); }

double RngStream::exponential() { return -std::log(uniform()); }

}  // namespace lamperti
