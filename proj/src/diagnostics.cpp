#include "sllg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "sllg/errors.hpp"

namespace sllg {

NodalField3 reconstruct_M(const NodalState& state, const RotationField& rotation) {
    if (rotation.step() != state.j) {
        throw MismatchError("rotation field is at step " + std::to_string(rotation.step()) + ", state at step " +
                            std::to_string(state.j));
    }
    return rotation.apply_Z_nodes(state.m);
}

TrajectoryInterpolants::TrajectoryInterpolants(const Trajectory& traj)
    : params_(traj.params), steps_(traj.params.steps), k_(traj.params.k()) {
    if (static_cast<int>(traj.states.size()) != steps_ + 1) {
        throw InvalidArgument("interpolants need all J + 1 states; run with keep_states");
    }
    m_.reserve(traj.states.size());
    v_.reserve(traj.states.size());
    for (const auto& s : traj.states) {
        m_.push_back(s.m);
        v_.push_back(s.v);
    }
}

int TrajectoryInterpolants::interval(double t) const {
    const int j = static_cast<int>(std::floor(t / k_));
    return std::clamp(j, 0, steps_ - 1);
}

NodalField3 TrajectoryInterpolants::m_hk(double t) const {
    const int j = interval(t);
    // exact grid values at t_j
    if (t == j * k_) return m_[j];
    if (t == (j + 1) * k_) return m_[j + 1];
    const double s = (t - j * k_) / k_;
    return (1.0 - s) * m_[j] + s * m_[j + 1];
}

const NodalField3& TrajectoryInterpolants::m_minus(double t) const { return m_[interval(t)]; }

const NodalField3& TrajectoryInterpolants::v_hk(double t) const { return v_[interval(t)]; }

InterpolantErrors interpolant_errors(const TrajectoryInterpolants& interp, const P1Space& space) {
    InterpolantErrors out;
    const double k = interp.step_size();
    // 3-point Gauss-Legendre on [0, 1]
    const double gl_x[3] = {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
    const double gl_w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

    QuadField next = space.sample(interp.m(0));
    for (int j = 0; j < interp.steps(); ++j) {
        const QuadField cur = std::move(next);
        next = space.sample(interp.m(j + 1));
        const QuadField vs = space.sample(interp.v(j));
        double jump_sq = 0.0, sphere = 0.0, l1 = 0.0;
        for (std::size_t c = 0; c < space.num_cells(); ++c) {
            for (int iq = 0; iq < space.quad_per_cell(); ++iq) {
                const std::size_t p = space.quad_index(c, iq);
                const double w = space.quad_weight(c, iq);
                const Vec3 diff = next.value[p] - cur.value[p];
                jump_sq += w * diff.squaredNorm();
                l1 += w * (vs.value[p] - diff / k).norm();
                for (int g = 0; g < 3; ++g) {
                    const double dev = (cur.value[p] + gl_x[g] * diff).norm() - 1.0;
                    sphere += w * gl_w[g] * dev * dev;
                }
            }
        }
        // ∫_0^k (s/k)² ds = k/3
        out.m_minus_sq += k / 3.0 * jump_sq;
        out.sphere_sq += k * sphere;
        out.v_dt_l1 += k * l1;
    }
    return out;
}

double TestField::bump(double t) const {
    if (!(t > t0 && t < t1)) return 0.0;
    const double s = (2.0 * t - t0 - t1) / (t1 - t0);
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

Vec3 TestField::value(double t, const Vec3& x) const {
    return bump(t) * std::cos(std::numbers::pi * wave.dot(x) + phase) * amplitude;
}

Mat3 TestField::gradient(double t, const Vec3& x) const {
    const double s = -bump(t) * std::numbers::pi * std::sin(std::numbers::pi * wave.dot(x) + phase);
    return s * amplitude * wave.transpose();
}

std::vector<TestField> default_test_fields(double horizon) {
    const double t0 = 0.1 * horizon, t1 = 0.9 * horizon;
    return {
        TestField{Vec3(1, 0, 0), Vec3(1, 0, 0), 0.0, t0, t1},
        TestField{Vec3(0, 1, 0), Vec3(0, 1, 1), 0.0, t0, t1},
        TestField{Vec3(1, 1, 1).normalized(), Vec3(1, 1, 0), std::numbers::pi / 4.0, t0, t1},
    };
}

std::vector<WeakResidual> weak_residuals(const TrajectoryInterpolants& interp, const P1Space& space,
                                         const NoiseCoefficients& coeffs, const WienerPath& path,
                                         const std::vector<TestField>& fields) {
    if (path.steps != interp.steps()) throw MismatchError("path and trajectory have different step counts");
    const SchemeParams& prm = interp.params();
    const double l1 = prm.lambda1, l2 = prm.lambda2, mu = prm.mu();
    const double k = interp.step_size();
    const double T = interp.horizon();
    const int dim = space.dim();
    const std::size_t nq = space.num_quad_points();
    const auto& xq = space.quad_points();

    std::vector<WeakResidual> out(fields.size());
    for (std::size_t f = 0; f < fields.size(); ++f) {
        out[f].support_warning = !(fields[f].t0 > 0.0 && fields[f].t1 < T && fields[f].t0 < fields[f].t1);
    }

    RotationField rotation = RotationField::for_quadrature(space, coeffs);
    QuadField next = space.sample(interp.m(0));
    QuadField mbar, phi;
    mbar.value.resize(nq);
    mbar.grad.resize(nq);
    phi.value.resize(nq);
    phi.grad.resize(nq);
    std::vector<Vec3> dm(nq);

    for (int j = 0; j < interp.steps(); ++j) {
        const QuadField cur = std::move(next);
        next = space.sample(interp.m(j + 1));
        for (std::size_t p = 0; p < nq; ++p) {
            mbar.value[p] = 0.5 * (cur.value[p] + next.value[p]);
            mbar.grad[p] = 0.5 * (cur.grad[p] + next.grad[p]);
            dm[p] = (next.value[p] - cur.value[p]) / k;
        }
        const double tmid = (j + 0.5) * k;
        for (std::size_t f = 0; f < fields.size(); ++f) {
            if (fields[f].bump(tmid) == 0.0) continue;
            double local = 0.0;
            for (std::size_t c = 0; c < space.num_cells(); ++c) {
                for (int iq = 0; iq < space.quad_per_cell(); ++iq) {
                    const std::size_t p = space.quad_index(c, iq);
                    const Vec3 psi = fields[f].value(tmid, xq[p]);
                    const Mat3 gpsi = fields[f].gradient(tmid, xq[p]);
                    const Vec3& mb = mbar.value[p];
                    phi.value[p] = mb.cross(psi);
                    Mat3 gphi = Mat3::Zero();
                    for (int d = 0; d < dim; ++d) {
                        gphi.col(d) = mbar.grad[p].col(d).cross(psi) + mb.cross(gpsi.col(d));
                    }
                    phi.grad[p] = gphi;
                    double grad_term = 0.0;
                    for (int d = 0; d < dim; ++d) grad_term += mbar.grad[p].col(d).dot(gphi.col(d));
                    local += space.quad_weight(c, iq) *
                             (l1 * mb.cross(dm[p]).dot(phi.value[p]) - l2 * dm[p].dot(phi.value[p]) - mu * grad_term);
                }
            }
            local -= mu * F_pointwise(rotation, space, mbar, phi);
            out[f].value += k * local;
        }
        rotation.evolve_to(path, j + 1);
    }
    return out;
}

WeakResidual weak_residual(const TrajectoryInterpolants& interp, const P1Space& space,
                           const NoiseCoefficients& coeffs, const WienerPath& path, const TestField& field) {
    return weak_residuals(interp, space, coeffs, path, {field}).front();
}

Vec3 solve_phi(double lambda1, double lambda2, const Vec3& zeta, const Vec3& psi) {
    if (lambda1 == 0.0 || !std::isfinite(lambda1)) throw InvalidArgument("solve_phi needs lambda1 != 0");
    if (!(std::abs(zeta.norm() - 1.0) <= 1e-10)) throw InvalidArgument("solve_phi needs a unit vector zeta");
    const double along = psi.dot(zeta);
    const Vec3 perp = psi - along * zeta;
    return along / lambda1 * zeta + (lambda1 * perp - lambda2 * perp.cross(zeta)) / (lambda1 * lambda1 + lambda2 * lambda2);
}

void write_vtk(std::ostream& os, const Mesh& mesh, const std::vector<std::pair<std::string, NodalField3>>& fields,
               const std::string& title) {
    const int nv = mesh.vertices_per_cell();
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << std::setprecision(17);
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Vec3& x : mesh.vertices) os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
    os << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * (nv + 1) << '\n';
    for (const auto& cell : mesh.cells) {
        os << nv;
        for (int a = 0; a < nv; ++a) os << ' ' << cell[a];
        os << '\n';
    }
    os << "CELL_TYPES " << mesh.num_cells() << '\n';
    const int type = mesh.dim == 2 ? 5 : 10;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) os << type << '\n';
    if (fields.empty()) return;
    os << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& [name, field] : fields) {
        if (static_cast<std::size_t>(field.rows()) != mesh.num_vertices()) {
            throw MismatchError("VTK field '" + name + "' does not match the mesh");
        }
        os << "VECTORS " << name << " double\n";
        for (Eigen::Index n = 0; n < field.rows(); ++n) {
            os << field(n, 0) << ' ' << field(n, 1) << ' ' << field(n, 2) << '\n';
        }
    }
}

}  // namespace sllg
