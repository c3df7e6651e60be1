#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sllg/fem.hpp"
#include "sllg/rotation.hpp"
#include "sllg/tangent_scheme.hpp"

namespace sllg {

/// M(x_n) = Z_t(x_n) m(x_n). Throws MismatchError unless the rotation field
/// is at the state's step.
NodalField3 reconstruct_M(const NodalState& state, const RotationField& rotation);

/// Time interpolants of a trajectory on the grid t_j = j k:
///   m_{h,k}(t) = ((t_{j+1} − t) m^j + (t − t_j) m^{j+1}) / k,
///   m⁻_{h,k}(t) = m^j and v_{h,k}(t) = v^j for t ∈ [t_j, t_{j+1}).
/// At t = T both piecewise-constant interpolants take the last value.
class TrajectoryInterpolants {
public:
    /// Needs a trajectory run with keep_states. Throws InvalidArgument otherwise.
    explicit TrajectoryInterpolants(const Trajectory& traj);

    [[nodiscard]] int steps() const noexcept { return steps_; }
    [[nodiscard]] double step_size() const noexcept { return k_; }
    [[nodiscard]] double horizon() const noexcept { return k_ * steps_; }
    [[nodiscard]] const SchemeParams& params() const noexcept { return params_; }
    [[nodiscard]] const NodalField3& m(int j) const { return m_[j]; }
    [[nodiscard]] const NodalField3& v(int j) const { return v_[j]; }

    /// Interval index j with t ∈ [t_j, t_{j+1}), clamped to [0, J−1].
    [[nodiscard]] int interval(double t) const;
    [[nodiscard]] NodalField3 m_hk(double t) const;
    [[nodiscard]] const NodalField3& m_minus(double t) const;
    [[nodiscard]] const NodalField3& v_hk(double t) const;
    /// Grid index whose rotation field F_k uses at time t.
    [[nodiscard]] int F_index(double t) const { return interval(t); }

private:
    SchemeParams params_;
    int steps_;
    double k_;
    std::vector<NodalField3> m_;
    std::vector<NodalField3> v_;
};

struct InterpolantErrors {
    /// ‖m_{h,k} − m⁻_{h,k}‖²_{L²(D_T)}
    double m_minus_sq = 0.0;
    /// ‖|m_{h,k}| − 1‖²_{L²(D_T)}
    double sphere_sq = 0.0;
    /// ‖v_{h,k} − ∂_t m_{h,k}‖_{L¹(D_T)}
    double v_dt_l1 = 0.0;
};

/// Space integrals by the quadrature of `space`. Time integrals are exact for
/// the first and third quantity; the second uses 3-point Gauss-Legendre per
/// interval because |m_{h,k}| is not polynomial in t.
InterpolantErrors interpolant_errors(const TrajectoryInterpolants& interp, const P1Space& space);

/// ψ(t, x) = b(t) A cos(π a·x + φ₀) with the smooth bump
/// b(t) = exp(1 − 1/(1 − s²)), s = (2t − t₀ − t₁)/(t₁ − t₀), supported on [t₀, t₁].
struct TestField {
    Vec3 amplitude = Vec3::UnitX();
    Vec3 wave = Vec3::UnitX();
    double phase = 0.0;
    double t0 = 0.1;
    double t1 = 0.9;

    [[nodiscard]] double bump(double t) const;
    [[nodiscard]] Vec3 value(double t, const Vec3& x) const;
    /// Column d is ∂ψ/∂x_d.
    [[nodiscard]] Mat3 gradient(double t, const Vec3& x) const;
};

/// Three members with supports [0.1T, 0.9T].
std::vector<TestField> default_test_fields(double horizon);

struct WeakResidual {
    double value = 0.0;
    /// The test field's time support is not inside (0, T).
    bool support_warning = false;
};

/// Σ_j k [λ₁⟨m̄×∂m, m̄×ψ⟩ − λ₂⟨∂m, m̄×ψ⟩ − μ⟨∇m̄, ∇(m̄×ψ)⟩ − μF(t_j, m̄, m̄×ψ)]
/// with m̄ = (m^j + m^{j+1})/2, ∂m = (m^{j+1} − m^j)/k and ψ at t_{j+½}.
/// F uses the rotation field at the left endpoint, replayed along `path`.
std::vector<WeakResidual> weak_residuals(const TrajectoryInterpolants& interp, const P1Space& space,
                                         const NoiseCoefficients& coeffs, const WienerPath& path,
                                         const std::vector<TestField>& fields);
WeakResidual weak_residual(const TrajectoryInterpolants& interp, const P1Space& space,
                           const NoiseCoefficients& coeffs, const WienerPath& path, const TestField& field);

/// The unique φ with λ₁φ + λ₂ φ×ζ = ψ. Throws InvalidArgument if λ₁ = 0 or
/// ||ζ| − 1| > 1e−10.
Vec3 solve_phi(double lambda1, double lambda2, const Vec3& zeta, const Vec3& psi);

/// Legacy ASCII VTK unstructured grid with one vector point-data array per entry.
void write_vtk(std::ostream& os, const Mesh& mesh, const std::vector<std::pair<std::string, NodalField3>>& fields,
               const std::string& title = "sllg snapshot");

}  // namespace sllg
