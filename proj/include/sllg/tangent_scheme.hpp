#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "sllg/fem.hpp"
#include "sllg/noise.hpp"
#include "sllg/rotation.hpp"
#include "sllg/wiener.hpp"

namespace sllg {

struct SchemeParams {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double theta = 1.0;
    double horizon = 1.0;
    int steps = 100;
    /// Relative residual ‖Ax − b‖ / ‖b‖ accepted from the linear solver.
    double solver_tol = 1e-10;
    int max_iterations = 2000;
    /// Systems with fewer unknowns than this are solved by dense LU.
    int dense_threshold = 600;
    /// c in the step-size guards k ≤ c h² (θ < ½) and k ≤ c h (θ = ½).
    double guard_constant = 0.1;

    [[nodiscard]] double mu() const noexcept { return lambda1 * lambda1 + lambda2 * lambda2; }
    [[nodiscard]] double k() const noexcept { return horizon / steps; }
    /// Throws InvalidArgument naming the offending parameter.
    void validate() const;
};

struct GuardCheck {
    bool ok = true;
    double bound = 0.0;  // largest admissible k, infinity when unconditional
    std::string reason;
};

/// Step-size condition for the θ regime: none for θ > ½, k ≤ c h for θ = ½,
/// k ≤ c h² for θ < ½.
GuardCheck check_theta_guard(const SchemeParams& params, double h);

/// Orthonormal basis τ₁, τ₂ of m(x_n)⊥ at each node.
///
/// Branch rule: with s = +1 if m₃ ≥ 0 and s = −1 otherwise, let H be the
/// Householder reflection with vector e₃ + s m, which swaps e₃ and −s m.
/// Then τ_a = H e_a. For m = e₃ this gives τ₁ = e₁, τ₂ = e₂.
struct TangentFrame {
    NodalField3 tau1;
    NodalField3 tau2;
};

/// Throws NodalError at the first node with ||m| − 1| > tol.
TangentFrame build_tangent_frame(const NodalField3& m, double tol = 1e-10);

struct NodalState {
    int j = 0;
    double t = 0.0;
    NodalField3 m;
    NodalField3 v;
    /// ‖∇m‖²
    double energy = 0.0;
};

/// Linear system in the tangent coordinates c, unknown (n, a) at index 2n + a:
/// v = Σ_n (c_{n,0} τ₁(n) + c_{n,1} τ₂(n)) φ_n.
struct StepSystem {
    int j = 0;
    TangentFrame frame;
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
    /// f with F(t_j, m, w) = Σ_n f_n · w(x_n).
    NodalField3 F_load;
};

struct StepSolution {
    NodalField3 v;
    Eigen::VectorXd coefficients;
    int iterations = 0;
    double residual = 0.0;
};

/// Matrices that stay fixed over a run, and the step operations of the scheme.
class TangentScheme {
public:
    /// Validates params and the θ guard (GuardViolation).
    TangentScheme(const P1Space& space, SchemeParams params);

    [[nodiscard]] const P1Space& space() const noexcept { return *space_; }
    [[nodiscard]] const SchemeParams& params() const noexcept { return params_; }
    [[nodiscard]] const SparseMatrix& stiffness() const noexcept { return stiffness_; }
    [[nodiscard]] const Eigen::VectorXd& lumped_mass() const noexcept { return lumped_; }

    /// Throws MismatchError if the rotation field is not at step state.j.
    [[nodiscard]] StepSystem assemble(const NodalState& state, const TangentFrame& frame,
                                      const RotationField& rotation) const;
    /// Throws SolverFailure if the relative residual exceeds the tolerance.
    [[nodiscard]] StepSolution solve(const StepSystem& system) const;
    /// m ← normalize(m + k v), j ← j + 1.
    [[nodiscard]] NodalState advance(const NodalState& state, const NodalField3& v) const;

    /// Tangent-coordinate vector to nodal field.
    [[nodiscard]] static NodalField3 expand(const TangentFrame& frame, const Eigen::VectorXd& c);
    /// Nodal field to tangent coordinates (projection onto the frame).
    [[nodiscard]] static Eigen::VectorXd restrict(const TangentFrame& frame, const NodalField3& w);

private:
    const P1Space* space_;
    SchemeParams params_;
    SparseMatrix stiffness_;
    Eigen::VectorXd lumped_;
};

StepSystem assemble_step_system(const TangentScheme& scheme, const NodalState& state, const TangentFrame& frame,
                                const RotationField& rotation);
StepSolution solve_step(const TangentScheme& scheme, const StepSystem& system);
NodalState advance(const TangentScheme& scheme, const NodalState& state, const NodalField3& v);

struct StepDiagnostics {
    int j = 0;
    double t = 0.0;
    /// ‖∇m^j‖²
    double energy = 0.0;
    /// ‖v^j‖² in the lumped pairing
    double v_norm_sq = 0.0;
    /// ‖∇v^j‖²
    double grad_v_sq = 0.0;
    /// F(t_j, m^j, v^j)
    double F_value = 0.0;
    int solver_iterations = 0;
    double residual = 0.0;
    /// max_n ||m^j(x_n)| − 1|
    double sphere_defect = 0.0;
    /// max_n |v^j(x_n) · m^j(x_n)|
    double tangency = 0.0;
    /// max ‖ZᵀZ − I‖_F at t_j
    double orthogonality_defect = 0.0;
    /// ‖∇m^j‖² − 2kF − (‖∇m^{j+1}‖² + 2kλ₂/μ ‖v^j‖² + k²(2θ−1)‖∇v^j‖²); nonnegative up to round-off
    double energy_slack = 0.0;
};

struct Trajectory {
    SchemeParams params;
    std::vector<StepDiagnostics> steps;
    /// m^0 .. m^J when RunOptions::keep_states is set; v^J is zero.
    std::vector<NodalState> states;
    NodalState final_state;
    /// The interpolated initial data was off the sphere by more than 1e-14.
    /// m^0 is normalized either way.
    bool initial_renormalized = false;
    double initial_sphere_defect = 0.0;
    bool offdiag_holds = true;

    [[nodiscard]] double max_sphere_defect() const;
    [[nodiscard]] double max_tangency() const;
    [[nodiscard]] double max_orthogonality_defect() const;
    [[nodiscard]] double min_energy_slack() const;
};

struct RunOptions {
    bool keep_states = true;
    /// Called with every state m^0..m^J and the rotation field at the same time.
    std::function<void(const NodalState&, const RotationField&)> observer;
};

/// Algorithm driver: m^0 = normalize(I_h m0), then J steps in lockstep with
/// the rotation field. Throws MismatchError if the path does not match the
/// params (steps, horizon) or the coefficients (q).
Trajectory run(const NodalField3& m0, const SchemeParams& params, const WienerPath& path,
               const NoiseCoefficients& coeffs, const P1Space& space, const RunOptions& options = {});

/// CSV with columns j,t,energy,v_norm_sq,F_value,solver_iters,residual, one
/// row per step j = 0..J−1 and a final row for m^J with zero step quantities.
void write_diagnostics_csv(std::ostream& os, const Trajectory& traj);

}  // namespace sllg
