#include "stainbench/numeric.hpp"

#include "stainbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace stainbench {

double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw DataError("percentile of an empty sample");
    if (!(p >= 0.0 && p <= 100.0)) throw UsageError("percentile must lie in [0, 100]");
    std::vector<double> v(values.begin(), values.end());
    const double position = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(position));
    const double frac = position - static_cast<double>(k);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    const double lower = v[k];
    if (frac == 0.0 || k + 1 >= v.size()) return lower;
    const double upper = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(k) + 1, v.end());
    return lower + frac * (upper - lower);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw UsageError("Rng::below needs a positive bound");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t draw = 0;
    do {
        draw = engine_();
    } while (draw >= limit);
    return draw % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

} // namespace stainbench
