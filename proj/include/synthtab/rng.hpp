#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace synthtab {

/// splitmix64 stream. Cheap to construct, so fresh streams are keyed per
/// (seed, epoch, batch) and data order and noise stay independently
/// reproducible. No libstdc++ distributions anywhere: sequences are
/// identical across platforms and toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // standard normal via Box-Muller; the spare value is cached per stream
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.28318530717958647692528676655900577 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // uniform index in [0, n); Lemire reduction
    size_t below(size_t n) {
        return static_cast<size_t>(
            (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Key derivation for sub-streams: hashes the parts through one splitmix round each.
inline uint64_t mix_key(uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    Rng h(a);
    uint64_t k = h.next_u64();
    k ^= Rng(b ^ 0x6a09e667f3bcc908ull).next_u64();
    k = Rng(k).next_u64();
    k ^= Rng(c ^ 0xbb67ae8584caa73bull).next_u64();
    return Rng(k).next_u64();
}

} // namespace synthtab
