#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sllg/mesh.hpp"

namespace sllg {

/// One noise direction g_i with its Jacobian (column d = dg_i/dx_d).
/// g_i is assumed to satisfy homogeneous Neumann conditions on the boundary;
/// this is not checked.
struct NoiseTerm {
    std::string name;
    std::function<Vec3(const Vec3&)> value;
    std::function<Mat3(const Vec3&)> jacobian;
};

struct NoiseCoefficients {
    std::vector<NoiseTerm> terms;
    [[nodiscard]] int q() const noexcept { return static_cast<int>(terms.size()); }
};

NoiseTerm constant_term(const Vec3& g, std::string name = "constant");
/// g(x) = alpha * (x_1, 0, 1 - x_1) along `axis` (0-based), with its constant Jacobian.
NoiseTerm linear_gradient_term(double alpha, int axis = 0);

/// Named presets, scaled by `amplitude`:
///   zero               q = 1, g = 0
///   constant-z         q = 1, g = e3
///   constant-x         q = 1, g = e1
///   pair-noncommuting  q = 2, g1 = e3, g2 = e1
///   linear-gradient    q = 1, g = (x1, 0, 1 - x1)
///   gradient-pair      q = 2, g1 = (x1, 0, 1 - x1), g2 = (0, x2, 1 - x2)
/// Throws InvalidArgument for unknown names.
NoiseCoefficients make_noise_preset(const std::string& name, double amplitude = 1.0);
const std::vector<std::string>& noise_preset_names();

}  // namespace sllg
