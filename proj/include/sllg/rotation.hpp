#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "sllg/fem.hpp"
#include "sllg/noise.hpp"
#include "sllg/wiener.hpp"

namespace sllg {

/// skew(a) x = a × x.
Mat3 skew(const Vec3& a) noexcept;

/// exp(skew(omega)) by the Rodrigues formula: rotation about omega/|omega|
/// by the angle |omega|. Returns the identity exactly for omega = 0.
Mat3 rotation_exp(const Vec3& omega) noexcept;

/// The operators of one noise term at a point x, as 3×3 matrices acting on
/// column vectors. G u = u × g, I^d u = u × ∂_d g, H^d = I^d G + G I^d.
struct PointOperators {
    Mat3 G;
    std::array<Mat3, 3> I;
    std::array<Mat3, 3> H;
};
PointOperators point_operators(const Vec3& g, const Mat3& jacobian);

/// Z_t and its spatial gradient ξ_t = ∇Z_t, tracked at a fixed set of
/// evaluation points: quadrature points first, then mesh nodes.
///
/// Z solves dZ = Σ_i G_i Z ∘ dW_i (Stratonovich) and is advanced by the
/// Lie-Euler step Z ← exp(Σ_i ΔW_i G_i) Z, which is orthogonal up to
/// round-off. ξ_d solves the linear Itô equation
///   dξ_d = ½Σ_i (G_i² ξ_d + H_i^d Z) dt + Σ_i (G_i ξ_d + I_i^d Z) dW_i
/// and is advanced by Euler-Maruyama with Z frozen at the left endpoint.
class RotationField {
public:
    RotationField(const std::vector<Vec3>& quad_points, const std::vector<Vec3>& node_points,
                  const NoiseCoefficients& coeffs, int dim);

    /// Quadrature points and nodes of `space`.
    static RotationField for_space(const P1Space& space, const NoiseCoefficients& coeffs);
    /// Quadrature points of `space` only; enough for F and assembly.
    static RotationField for_quadrature(const P1Space& space, const NoiseCoefficients& coeffs);

    [[nodiscard]] int q() const noexcept { return q_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t num_quad() const noexcept { return num_quad_; }
    [[nodiscard]] std::size_t num_nodes() const noexcept { return num_nodes_; }
    [[nodiscard]] std::size_t num_points() const noexcept { return num_quad_ + num_nodes_; }
    [[nodiscard]] int step() const noexcept { return step_; }
    [[nodiscard]] double time() const noexcept { return time_; }

    [[nodiscard]] const Mat3& Z_quad(std::size_t p) const { return Z_[p]; }
    [[nodiscard]] const Mat3& Z_node(std::size_t n) const { return Z_[num_quad_ + n]; }
    [[nodiscard]] const Mat3& xi_quad(std::size_t p, int d) const { return xi_[p][d]; }
    [[nodiscard]] const Mat3& xi_node(std::size_t n, int d) const { return xi_[num_quad_ + n][d]; }

    /// Noise data cached at quadrature point p for term i.
    [[nodiscard]] const Vec3& g_quad(std::size_t p, int i) const { return g_[p * q_ + i]; }
    [[nodiscard]] const Mat3& dg_quad(std::size_t p, int i) const { return dg_[p * q_ + i]; }

    /// One step with increments dW (length q) and step size k.
    /// Throws InvalidArgument on a non-finite increment or size mismatch.
    void evolve(std::span<const double> dW, double k);
    /// Advances through steps [step(), j) of `path`.
    void evolve_to(const WienerPath& path, int j);

    /// Z u (or Zᵀ u) at the nodes. Throws MismatchError on a size mismatch.
    [[nodiscard]] NodalField3 apply_Z_nodes(const NodalField3& u, bool inverse = false) const;
    /// Z u (or Zᵀ u) at the quadrature points.
    [[nodiscard]] std::vector<Vec3> apply_Z_quad(const std::vector<Vec3>& u, bool inverse = false) const;

    /// Largest ‖ZᵀZ − I‖_F over all points.
    [[nodiscard]] double orthogonality_defect() const;

private:
    int q_;
    int dim_;
    std::size_t num_quad_;
    std::size_t num_nodes_;
    int step_ = 0;
    double time_ = 0.0;
    std::vector<Vec3> g_;
    std::vector<Mat3> dg_;
    std::vector<Mat3> Z_;
    std::vector<std::array<Mat3, 3>> xi_;
};

/// Free-function form of RotationField::evolve.
void evolve_step(RotationField& field, std::span<const double> dW, double k);

/// ∇(Z u) at every quadrature point by the product rule ξ u + Z ∇u.
/// Column d of each matrix is the derivative along x_d.
std::vector<Mat3> grad_Z_apply(const RotationField& field, const P1Space& space, const NodalField3& u);

/// ⟨∇(Z u), ∇(Z v)⟩ − ⟨∇u, ∇v⟩ for fields given by their values and
/// gradients at the quadrature points. The difference is formed pointwise so
/// that it vanishes exactly when Z = I and ξ = 0.
double F_pointwise(const RotationField& field, const P1Space& space, const QuadField& u, const QuadField& v);

/// F(t, u, v) for P1 fields u, v at the field's current time.
double compute_F_identity(const RotationField& field, const P1Space& space, const NodalField3& u,
                          const NodalField3& v);

/// Load vector f with F(t, m, w) = Σ_n f_n · w(x_n) for every P1 field w.
NodalField3 F_load(const RotationField& field, const P1Space& space, const NodalField3& m);

/// F(t_j, u, v) from its defining stochastic integral: left-point sums of
/// Σ_i F_{1,i} k + F_{2,i} ΔW_i along `path` on [0, t_j], replaying Z and ξ
/// from t = 0. Throws InvalidArgument if j is outside [0, path.steps].
double compute_F_direct(const WienerPath& path, const NoiseCoefficients& coeffs, const P1Space& space,
                        const NodalField3& u, const NodalField3& v, int j);

/// Debug dump: node,z11,...,z33 per node, row-major, 17 significant digits.
void write_Z_csv(std::ostream& os, const RotationField& field);

}  // namespace sllg
