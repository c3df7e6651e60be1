#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace sllg {

/// Counter-based normal variates built on the SplitMix64 output function.
///
/// Stream derivation: a path seed s gives the SplitMix64 state
/// `mix(s) + (c + 1) * 0x9E3779B97F4A7C15` for counter c, i.e. the c-th
/// output of a SplitMix64 generator seeded with mix(s). Increment (step j,
/// component i) of a q-dimensional path consumes counters 2(jq+i) and
/// 2(jq+i)+1 through one Box-Muller transform. Monte Carlo sample r of a
/// study with base seed b uses path seed `derive_seed(b, r)`.
/// Draws therefore depend only on (seed, step, component) and can be
/// generated in any order or in parallel.
class CounterNormal {
public:
    explicit CounterNormal(std::uint64_t seed) noexcept;
    [[nodiscard]] std::uint64_t bits(std::uint64_t counter) const noexcept;
    /// Uniform in (0, 1).
    [[nodiscard]] double uniform(std::uint64_t counter) const noexcept;
    /// Standard normal for draw index `index`.
    [[nodiscard]] double normal(std::uint64_t index) const noexcept;

private:
    std::uint64_t key_;
};

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept;

/// Brownian increments of a q-dimensional Wiener process on a uniform grid
/// t_j = j k, k = T / J.
struct WienerPath {
    int q = 1;
    int steps = 1;
    double horizon = 1.0;
    std::uint64_t seed = 0;
    int level = 0;
    /// increments[j * q + i] = W_i(t_{j+1}) - W_i(t_j)
    std::vector<double> increments;

    [[nodiscard]] double step_size() const noexcept { return horizon / steps; }
    [[nodiscard]] double increment(int j, int i) const { return increments[static_cast<std::size_t>(j) * q + i]; }
    /// W_i(t_j), summed left to right.
    [[nodiscard]] double value(int j, int i) const;
};

WienerPath sample_path(std::uint64_t seed, int q, int steps, double horizon);

/// Sums consecutive blocks of `factor` increments. Throws InvalidArgument
/// unless factor is a power of two dividing the step count.
WienerPath coarsen(const WienerPath& path, int factor);

/// CSV with columns step,t,dW_1..dW_q and 17 significant digits.
void write_path_csv(std::ostream& os, const WienerPath& path);

}  // namespace sllg
