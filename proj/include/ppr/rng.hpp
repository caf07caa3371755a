#ifndef PPR_RNG_HPP
#define PPR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace ppr {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen over std engines because the
// output sequence is fixed by the algorithm itself, so split manifests and
// trained parameters reproduce bit-exactly on any platform.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derive an independent stream, e.g. per class or per epoch.
    Rng fork(std::uint64_t stream) const {
        std::uint64_t s = state_;
        std::uint64_t mixed = splitmix64_next(s) ^ (0xD1B54A32D192ED03ULL * (stream + 1));
        return Rng(mixed);
    }

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t bounded(std::uint64_t n) { return next_u64() % n; }

    /// Uniform double in [0, 1) with 53 bits of randomness.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; deterministic two-draw form.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Fisher-Yates shuffle; visiting order fixed so results are portable.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

} // namespace ppr

#endif
