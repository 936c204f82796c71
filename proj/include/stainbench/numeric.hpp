#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace stainbench {

// Empirical percentile with linear interpolation between order statistics
// (position p/100 * (n - 1)); p in [0, 100].
double percentile(std::span<const double> values, double p);

// Seeded generator whose draws do not depend on the standard library's
// distribution implementations, so sequences are identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n), unbiased.
    std::uint64_t below(std::uint64_t n);
    // Standard normal via Box-Muller.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace stainbench
