#include "sllg/wiener.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

#include "sllg/errors.hpp"

namespace sllg {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
    return splitmix64_mix(splitmix64_mix(base_seed) ^ splitmix64_mix(index + kGolden));
}

CounterNormal::CounterNormal(std::uint64_t seed) noexcept : key_(splitmix64_mix(seed)) {}

std::uint64_t CounterNormal::bits(std::uint64_t counter) const noexcept {
    return splitmix64_mix(key_ + (counter + 1) * kGolden);
}

double CounterNormal::uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterNormal::normal(std::uint64_t index) const noexcept {
    const double u1 = uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double WienerPath::value(int j, int i) const {
    double w = 0.0;
    for (int s = 0; s < j; ++s) w += increment(s, i);
    return w;
}

WienerPath sample_path(std::uint64_t seed, int q, int steps, double horizon) {
    if (q < 1) throw InvalidArgument("noise dimension q must be >= 1");
    if (steps < 1) throw InvalidArgument("step count must be >= 1");
    if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
    WienerPath path;
    path.q = q;
    path.steps = steps;
    path.horizon = horizon;
    path.seed = seed;
    const double scale = std::sqrt(horizon / steps);
    const CounterNormal rng(seed);
    path.increments.resize(static_cast<std::size_t>(steps) * q);
    for (std::size_t idx = 0; idx < path.increments.size(); ++idx) {
        path.increments[idx] = scale * rng.normal(idx);
    }
    return path;
}

WienerPath coarsen(const WienerPath& path, int factor) {
    if (factor < 1 || !std::has_single_bit(static_cast<unsigned>(factor)) || path.steps % factor != 0) {
        throw InvalidArgument("coarsening factor " + std::to_string(factor) + " does not divide " +
                              std::to_string(path.steps) + " steps");
    }
    WienerPath out = path;
    out.steps = path.steps / factor;
    out.level = path.level - std::countr_zero(static_cast<unsigned>(factor));
    out.increments.assign(static_cast<std::size_t>(out.steps) * path.q, 0.0);
    for (int j = 0; j < out.steps; ++j) {
        for (int i = 0; i < path.q; ++i) {
            double sum = 0.0;
            for (int s = 0; s < factor; ++s) sum += path.increment(j * factor + s, i);
            out.increments[static_cast<std::size_t>(j) * path.q + i] = sum;
        }
    }
    return out;
}

void write_path_csv(std::ostream& os, const WienerPath& path) {
    os << "step,t";
    for (int i = 1; i <= path.q; ++i) os << ",dW_" << i;
    os << '\n' << std::setprecision(17);
    const double k = path.step_size();
    for (int j = 0; j < path.steps; ++j) {
        os << j << ',' << j * k;
        for (int i = 0; i < path.q; ++i) os << ',' << path.increment(j, i);
        os << '\n';
    }
}

}  // namespace sllg
