#pragma once

#include <cmath>
#include <cstdint>

namespace switchdiff {

// Counter-based stream derivation: every (master_seed, stream_id) pair maps
// to an independent generator state, so replica i of an ensemble produces
// the same numbers no matter which thread runs it.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with per-stream seeding.
class Rng {
public:
    Rng(std::uint64_t master_seed, std::uint64_t stream_id) {
        std::uint64_t st = master_seed;
        (void)splitmix64(st);
        st ^= 0xd1342543de82ef95ULL * (stream_id + 1);
        for (auto& w : s_) w = splitmix64(st);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in (0,1); never returns 0, so log() is safe.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Marsaglia polar method; second deviate cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, r2;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            r2 = u * u + v * v;
        } while (r2 >= 1.0 || r2 == 0.0);
        const double f = std::sqrt(-2.0 * std::log(r2) / r2);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Disjoint sub-stream labelling: estimator calls reserve a block id and
// replica i within the block draws from stream hash(block, i).
inline std::uint64_t stream_of(std::uint64_t block, std::uint64_t replica) {
    std::uint64_t st = block * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL;
    (void)splitmix64(st);
    st += replica;
    return splitmix64(st);
}

}  // namespace switchdiff
