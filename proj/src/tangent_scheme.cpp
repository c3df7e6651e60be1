#include "sllg/tangent_scheme.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include "sllg/errors.hpp"

namespace sllg {

void SchemeParams::validate() const {
    if (!std::isfinite(lambda1) || lambda1 == 0.0) throw InvalidArgument("lambda1 must be finite and nonzero");
    if (!(lambda2 > 0.0) || !std::isfinite(lambda2)) throw InvalidArgument("lambda2 must be positive");
    if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta must lie in [0, 1]");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon T must be positive");
    if (steps < 1) throw InvalidArgument("step count J must be >= 1");
    if (!(solver_tol > 0.0 && solver_tol < 1.0)) throw InvalidArgument("solver tolerance must lie in (0, 1)");
    if (max_iterations < 1) throw InvalidArgument("solver max iterations must be >= 1");
    if (dense_threshold < 0) throw InvalidArgument("dense threshold must be >= 0");
    if (!(guard_constant > 0.0) || !std::isfinite(guard_constant)) {
        throw InvalidArgument("guard constant must be positive");
    }
}

GuardCheck check_theta_guard(const SchemeParams& params, double h) {
    GuardCheck out;
    const double k = params.k();
    if (params.theta > 0.5) {
        out.bound = std::numeric_limits<double>::infinity();
        return out;
    }
    const bool half = params.theta == 0.5;
    out.bound = half ? params.guard_constant * h : params.guard_constant * h * h;
    if (k > out.bound) {
        out.ok = false;
        std::ostringstream msg;
        msg << std::setprecision(6) << "theta = " << params.theta << " requires k <= " << params.guard_constant
            << (half ? " * h" : " * h^2") << " = " << out.bound << " (h = " << h << "), but k = " << k;
        out.reason = msg.str();
    }
    return out;
}

TangentFrame build_tangent_frame(const NodalField3& m, double tol) {
    TangentFrame frame{NodalField3(m.rows(), 3), NodalField3(m.rows(), 3)};
    for (Eigen::Index n = 0; n < m.rows(); ++n) {
        const Vec3 mn = m.row(n).transpose();
        if (!mn.allFinite() || std::abs(mn.norm() - 1.0) > tol) {
            throw NodalError(static_cast<std::size_t>(n), "node " + std::to_string(n) + " is not unit length");
        }
        Vec3 w = mn[2] >= 0.0 ? Vec3(mn) : Vec3(-mn);
        w[2] += 1.0;
        const double scale = 2.0 / w.squaredNorm();
        frame.tau1.row(n) = (Vec3::UnitX() - scale * w[0] * w).transpose();
        frame.tau2.row(n) = (Vec3::UnitY() - scale * w[1] * w).transpose();
    }
    return frame;
}

TangentScheme::TangentScheme(const P1Space& space, SchemeParams params)
    : space_(&space), params_(params) {
    params_.validate();
    const GuardCheck guard = check_theta_guard(params_, space.h());
    if (!guard.ok) throw GuardViolation(guard.reason);
    stiffness_ = assemble_stiffness(space);
    lumped_ = assemble_lumped_mass(space).diagonal();
}

NodalField3 TangentScheme::expand(const TangentFrame& frame, const Eigen::VectorXd& c) {
    NodalField3 v(frame.tau1.rows(), 3);
    for (Eigen::Index n = 0; n < v.rows(); ++n) {
        v.row(n) = c[2 * n] * frame.tau1.row(n) + c[2 * n + 1] * frame.tau2.row(n);
    }
    return v;
}

Eigen::VectorXd TangentScheme::restrict(const TangentFrame& frame, const NodalField3& w) {
    Eigen::VectorXd c(2 * w.rows());
    for (Eigen::Index n = 0; n < w.rows(); ++n) {
        c[2 * n] = frame.tau1.row(n).dot(w.row(n));
        c[2 * n + 1] = frame.tau2.row(n).dot(w.row(n));
    }
    return c;
}

StepSystem TangentScheme::assemble(const NodalState& state, const TangentFrame& frame,
                                   const RotationField& rotation) const {
    if (rotation.step() != state.j) {
        throw MismatchError("rotation field is at step " + std::to_string(rotation.step()) + ", state at step " +
                            std::to_string(state.j));
    }
    const auto N = static_cast<Eigen::Index>(space_->num_nodes());
    if (state.m.rows() != N || frame.tau1.rows() != N) throw MismatchError("state size does not match the space");

    const double l1 = params_.lambda1, l2 = params_.lambda2, mu = params_.mu();
    const double stiff_scale = -mu * params_.k() * params_.theta;

    StepSystem sys;
    sys.j = state.j;
    sys.frame = frame;
    sys.F_load = F_load(rotation, *space_, state.m);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(stiffness_.nonZeros()) * 4);
    const NodalField3 km = stiffness_ * state.m;
    sys.rhs.resize(2 * N);
    for (Eigen::Index p = 0; p < N; ++p) {
        const Vec3 tp[2] = {frame.tau1.row(p).transpose(), frame.tau2.row(p).transpose()};
        const Vec3 load = mu * (km.row(p) + sys.F_load.row(p)).transpose();
        for (int b = 0; b < 2; ++b) sys.rhs[2 * p + b] = load.dot(tp[b]);

        if (stiff_scale != 0.0) {
            for (SparseMatrix::InnerIterator it(stiffness_, p); it; ++it) {
                const Eigen::Index n = it.col();
                const Vec3 tn[2] = {frame.tau1.row(n).transpose(), frame.tau2.row(n).transpose()};
                for (int b = 0; b < 2; ++b) {
                    for (int a = 0; a < 2; ++a) {
                        triplets.emplace_back(2 * p + b, 2 * n + a, stiff_scale * it.value() * tn[a].dot(tp[b]));
                    }
                }
            }
        }
        const Vec3 mp = state.m.row(p).transpose();
        const double mass = lumped_[p];
        for (int b = 0; b < 2; ++b) {
            for (int a = 0; a < 2; ++a) {
                const double val = (a == b ? -l2 * mass : 0.0) + l1 * mass * mp.cross(tp[a]).dot(tp[b]);
                triplets.emplace_back(2 * p + b, 2 * p + a, val);
            }
        }
    }
    sys.matrix.resize(2 * N, 2 * N);
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return sys;
}

StepSolution TangentScheme::solve(const StepSystem& system) const {
    StepSolution sol;
    const Eigen::Index n = system.rhs.size();
    const double bnorm = system.rhs.norm();
    if (bnorm == 0.0) {
        sol.coefficients = Eigen::VectorXd::Zero(n);
        sol.v = expand(system.frame, sol.coefficients);
        return sol;
    }
    if (n < params_.dense_threshold) {
        const Eigen::MatrixXd dense(system.matrix);
        sol.coefficients = dense.partialPivLu().solve(system.rhs);
        sol.iterations = 1;
    } else {
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
        solver.preconditioner().setDroptol(1e-6);
        solver.setTolerance(0.1 * params_.solver_tol);
        solver.setMaxIterations(params_.max_iterations);
        solver.compute(system.matrix);
        if (solver.info() != Eigen::Success) {
            throw SolverFailure("preconditioner setup failed at step " + std::to_string(system.j),
                                std::numeric_limits<double>::quiet_NaN(), 0);
        }
        sol.coefficients = solver.solve(system.rhs);
        sol.iterations = static_cast<int>(solver.iterations());
    }
    sol.residual = (system.matrix * sol.coefficients - system.rhs).norm() / bnorm;
    if (!(sol.residual <= params_.solver_tol)) {
        throw SolverFailure("linear solve at step " + std::to_string(system.j) + " reached relative residual " +
                                std::to_string(sol.residual),
                            sol.residual, sol.iterations);
    }
    sol.v = expand(system.frame, sol.coefficients);
    return sol;
}

NodalState TangentScheme::advance(const NodalState& state, const NodalField3& v) const {
    NodalState next;
    next.j = state.j + 1;
    next.t = next.j * params_.k();
    next.m = normalize_nodal(state.m + params_.k() * v);
    next.v = NodalField3::Zero(v.rows(), 3);
    next.energy = dirichlet_energy(stiffness_, next.m);
    return next;
}

StepSystem assemble_step_system(const TangentScheme& scheme, const NodalState& state, const TangentFrame& frame,
                                const RotationField& rotation) {
    return scheme.assemble(state, frame, rotation);
}

StepSolution solve_step(const TangentScheme& scheme, const StepSystem& system) { return scheme.solve(system); }

NodalState advance(const TangentScheme& scheme, const NodalState& state, const NodalField3& v) {
    return scheme.advance(state, v);
}

double Trajectory::max_sphere_defect() const {
    double out = 0.0;
    for (const auto& s : steps) out = std::max(out, s.sphere_defect);
    return std::max(out, (final_state.m.rowwise().norm().array() - 1.0).abs().maxCoeff());
}

double Trajectory::max_tangency() const {
    double out = 0.0;
    for (const auto& s : steps) out = std::max(out, s.tangency);
    return out;
}

double Trajectory::max_orthogonality_defect() const {
    double out = 0.0;
    for (const auto& s : steps) out = std::max(out, s.orthogonality_defect);
    return out;
}

double Trajectory::min_energy_slack() const {
    double out = std::numeric_limits<double>::infinity();
    for (const auto& s : steps) out = std::min(out, s.energy_slack);
    return out;
}

Trajectory run(const NodalField3& m0, const SchemeParams& params, const WienerPath& path,
               const NoiseCoefficients& coeffs, const P1Space& space, const RunOptions& options) {
    if (path.q != coeffs.q()) throw MismatchError("path dimension q does not match the noise coefficients");
    if (path.steps != params.steps) throw MismatchError("path step count does not match J");
    if (std::abs(path.horizon - params.horizon) > 1e-12 * params.horizon) {
        throw MismatchError("path horizon does not match T");
    }
    if (static_cast<std::size_t>(m0.rows()) != space.num_nodes()) {
        throw MismatchError("initial field does not match the space");
    }

    const TangentScheme scheme(space, params);
    Trajectory traj;
    traj.params = params;
    traj.offdiag_holds = check_offdiag_condition(scheme.stiffness()).holds;
    traj.initial_sphere_defect = (m0.rowwise().norm().array() - 1.0).abs().maxCoeff();
    traj.initial_renormalized = traj.initial_sphere_defect > 1e-14;

    const double k = params.k();
    const double mu = params.mu();
    RotationField rotation = RotationField::for_space(space, coeffs);

    NodalState state;
    state.m = normalize_nodal(m0);
    state.v = NodalField3::Zero(m0.rows(), 3);
    state.energy = dirichlet_energy(scheme.stiffness(), state.m);
    traj.steps.reserve(static_cast<std::size_t>(params.steps));

    for (int j = 0; j < params.steps; ++j) {
        const TangentFrame frame = build_tangent_frame(state.m);
        const StepSystem sys = scheme.assemble(state, frame, rotation);
        const StepSolution sol = scheme.solve(sys);
        state.v = sol.v;

        StepDiagnostics d;
        d.j = j;
        d.t = state.t;
        d.energy = state.energy;
        d.v_norm_sq = lumped_pairing(scheme.lumped_mass(), sol.v, sol.v);
        d.grad_v_sq = dirichlet_energy(scheme.stiffness(), sol.v);
        d.F_value = sys.F_load.cwiseProduct(sol.v).sum();
        d.solver_iterations = sol.iterations;
        d.residual = sol.residual;
        d.sphere_defect = (state.m.rowwise().norm().array() - 1.0).abs().maxCoeff();
        d.tangency = state.m.cwiseProduct(sol.v).rowwise().sum().cwiseAbs().maxCoeff();
        d.orthogonality_defect = rotation.orthogonality_defect();

        if (options.observer) options.observer(state, rotation);
        if (options.keep_states) traj.states.push_back(state);

        NodalState next = scheme.advance(state, sol.v);
        d.energy_slack = (d.energy - 2.0 * k * d.F_value) -
                         (next.energy + 2.0 * k * params.lambda2 / mu * d.v_norm_sq +
                          k * k * (2.0 * params.theta - 1.0) * d.grad_v_sq);
        traj.steps.push_back(d);

        rotation.evolve_to(path, j + 1);
        state = std::move(next);
    }
    if (options.observer) options.observer(state, rotation);
    if (options.keep_states) traj.states.push_back(state);
    traj.final_state = std::move(state);
    return traj;
}

void write_diagnostics_csv(std::ostream& os, const Trajectory& traj) {
    os << "j,t,energy,v_norm_sq,F_value,solver_iters,residual\n" << std::setprecision(17);
    for (const auto& d : traj.steps) {
        os << d.j << ',' << d.t << ',' << d.energy << ',' << d.v_norm_sq << ',' << d.F_value << ','
           << d.solver_iterations << ',' << d.residual << '\n';
    }
    os << traj.final_state.j << ',' << traj.final_state.t << ',' << traj.final_state.energy << ",0,0,0,0\n";
}

}  // namespace sllg
