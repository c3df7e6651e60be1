#include "sllg/rotation.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "sllg/errors.hpp"

namespace sllg {

Mat3 skew(const Vec3& a) noexcept {
    Mat3 s;
    s << 0.0, -a.z(), a.y(),
         a.z(), 0.0, -a.x(),
         -a.y(), a.x(), 0.0;
    return s;
}

Mat3 rotation_exp(const Vec3& omega) noexcept {
    const double theta2 = omega.squaredNorm();
    if (theta2 == 0.0) return Mat3::Identity();
    const Mat3 k = skew(omega);
    double s, c;  // sin(θ)/θ and (1 - cos θ)/θ²
    if (theta2 < 1e-8) {
        s = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
        c = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    } else {
        const double theta = std::sqrt(theta2);
        s = std::sin(theta) / theta;
        // 1 - cos θ = 2 sin²(θ/2), avoids cancellation for moderate θ
        const double half = std::sin(0.5 * theta);
        c = 2.0 * half * half / theta2;
    }
    return Mat3::Identity() + s * k + c * (k * k);
}

PointOperators point_operators(const Vec3& g, const Mat3& jacobian) {
    PointOperators ops;
    ops.G = -skew(g);
    for (int d = 0; d < 3; ++d) {
        ops.I[d] = -skew(jacobian.col(d));
        ops.H[d] = ops.I[d] * ops.G + ops.G * ops.I[d];
    }
    return ops;
}

RotationField::RotationField(const std::vector<Vec3>& quad_points, const std::vector<Vec3>& node_points,
                             const NoiseCoefficients& coeffs, int dim)
    : q_(coeffs.q()), dim_(dim), num_quad_(quad_points.size()), num_nodes_(node_points.size()) {
    if (q_ < 1) throw InvalidArgument("rotation field needs at least one noise term");
    if (dim < 1 || dim > 3) throw InvalidArgument("rotation field dimension must be 1, 2 or 3");
    const std::size_t np = num_points();
    g_.resize(np * q_);
    dg_.resize(np * q_);
    for (std::size_t p = 0; p < np; ++p) {
        const Vec3& x = p < num_quad_ ? quad_points[p] : node_points[p - num_quad_];
        for (int i = 0; i < q_; ++i) {
            const Vec3 g = coeffs.terms[i].value(x);
            Mat3 jac = coeffs.terms[i].jacobian(x);
            if (!g.allFinite() || !jac.allFinite()) {
                throw InvalidArgument("noise term '" + coeffs.terms[i].name + "' is not finite at an evaluation point");
            }
            for (int d = dim; d < 3; ++d) jac.col(d).setZero();
            g_[p * q_ + i] = g;
            dg_[p * q_ + i] = jac;
        }
    }
    Z_.assign(np, Mat3::Identity());
    std::array<Mat3, 3> zero;
    zero.fill(Mat3::Zero());
    xi_.assign(np, zero);
}

RotationField RotationField::for_space(const P1Space& space, const NoiseCoefficients& coeffs) {
    return RotationField(space.quad_points(), space.mesh().vertices, coeffs, space.dim());
}

RotationField RotationField::for_quadrature(const P1Space& space, const NoiseCoefficients& coeffs) {
    return RotationField(space.quad_points(), {}, coeffs, space.dim());
}

void RotationField::evolve(std::span<const double> dW, double k) {
    if (static_cast<int>(dW.size()) != q_) {
        throw InvalidArgument("expected " + std::to_string(q_) + " increments, got " + std::to_string(dW.size()));
    }
    for (const double w : dW) {
        if (!std::isfinite(w)) throw InvalidArgument("non-finite Wiener increment at step " + std::to_string(step_));
    }
    if (!(k > 0.0) || !std::isfinite(k)) throw InvalidArgument("step size must be positive");

    for (std::size_t p = 0; p < num_points(); ++p) {
        const Mat3 z = Z_[p];
        std::array<Mat3, 3>& xi = xi_[p];
        const std::array<Mat3, 3> xi_old = xi;
        Vec3 omega = Vec3::Zero();
        for (int i = 0; i < q_; ++i) {
            const Vec3& g = g_[p * q_ + i];
            const Mat3& jac = dg_[p * q_ + i];
            omega += dW[i] * g;
            const bool flat = jac.isZero(0.0);
            const Mat3 G = -skew(g);
            for (int d = 0; d < dim_; ++d) {
                if (flat) {
                    xi[d] += (0.5 * k) * (G * (G * xi_old[d])) + dW[i] * (G * xi_old[d]);
                    continue;
                }
                const Mat3 I = -skew(jac.col(d));
                const Mat3 H = I * G + G * I;
                xi[d] += (0.5 * k) * (G * (G * xi_old[d]) + H * z) + dW[i] * (G * xi_old[d] + I * z);
            }
        }
        // exp(Σ ΔW_i G_i) with G_i = -skew(g_i)
        Z_[p] = rotation_exp(-omega) * z;
    }
    ++step_;
    time_ += k;
}

void RotationField::evolve_to(const WienerPath& path, int j) {
    if (path.q != q_) throw MismatchError("path dimension does not match the noise coefficients");
    if (j < step_ || j > path.steps) {
        throw InvalidArgument("cannot evolve from step " + std::to_string(step_) + " to step " + std::to_string(j));
    }
    const double k = path.step_size();
    while (step_ < j) {
        const std::span<const double> dW(path.increments.data() + static_cast<std::size_t>(step_) * q_, q_);
        evolve(dW, k);
        time_ = step_ * k;
    }
}

NodalField3 RotationField::apply_Z_nodes(const NodalField3& u, bool inverse) const {
    if (static_cast<std::size_t>(u.rows()) != num_nodes_) {
        throw MismatchError("nodal field has " + std::to_string(u.rows()) + " rows, rotation field tracks " +
                            std::to_string(num_nodes_) + " nodes");
    }
    NodalField3 out(u.rows(), 3);
    for (Eigen::Index n = 0; n < u.rows(); ++n) {
        const Mat3& z = Z_[num_quad_ + n];
        const Vec3 un = u.row(n).transpose();
        const Vec3 r = inverse ? Vec3(z.transpose() * un) : Vec3(z * un);
        out.row(n) = r.transpose();
    }
    return out;
}

std::vector<Vec3> RotationField::apply_Z_quad(const std::vector<Vec3>& u, bool inverse) const {
    if (u.size() != num_quad_) {
        throw MismatchError("quadrature field has " + std::to_string(u.size()) + " points, rotation field tracks " +
                            std::to_string(num_quad_));
    }
    std::vector<Vec3> out(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) out[p] = inverse ? Vec3(Z_[p].transpose() * u[p]) : Vec3(Z_[p] * u[p]);
    return out;
}

double RotationField::orthogonality_defect() const {
    double worst = 0.0;
    for (const Mat3& z : Z_) worst = std::max(worst, (z.transpose() * z - Mat3::Identity()).norm());
    return worst;
}

void evolve_step(RotationField& field, std::span<const double> dW, double k) { field.evolve(dW, k); }

namespace {

void require_quad(const RotationField& field, const P1Space& space) {
    if (field.num_quad() != space.num_quad_points()) {
        throw MismatchError("rotation field is not defined on this space's quadrature points");
    }
}

// Column d: ξ_d u + Z ∂_d u.
Mat3 rotated_gradient(const RotationField& field, std::size_t p, const Vec3& u, const Mat3& grad) {
    Mat3 out = field.Z_quad(p) * grad;
    for (int d = 0; d < field.dim(); ++d) out.col(d) += field.xi_quad(p, d) * u;
    return out;
}

}  // namespace

std::vector<Mat3> grad_Z_apply(const RotationField& field, const P1Space& space, const NodalField3& u) {
    require_quad(field, space);
    const QuadField s = space.sample(u);
    std::vector<Mat3> out(s.value.size());
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = rotated_gradient(field, p, s.value[p], s.grad[p]);
    return out;
}

double F_pointwise(const RotationField& field, const P1Space& space, const QuadField& u, const QuadField& v) {
    require_quad(field, space);
    if (u.value.size() != field.num_quad() || v.value.size() != field.num_quad()) {
        throw MismatchError("sampled fields do not match the quadrature points");
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < space.num_cells(); ++c) {
        for (int iq = 0; iq < space.quad_per_cell(); ++iq) {
            const std::size_t p = space.quad_index(c, iq);
            const Mat3 U = rotated_gradient(field, p, u.value[p], u.grad[p]);
            const Mat3 V = rotated_gradient(field, p, v.value[p], v.grad[p]);
            double local = 0.0;
            for (int d = 0; d < space.dim(); ++d) {
                local += U.col(d).dot(V.col(d)) - u.grad[p].col(d).dot(v.grad[p].col(d));
            }
            sum += space.quad_weight(c, iq) * local;
        }
    }
    return sum;
}

double compute_F_identity(const RotationField& field, const P1Space& space, const NodalField3& u,
                          const NodalField3& v) {
    return F_pointwise(field, space, space.sample(u), space.sample(v));
}

NodalField3 F_load(const RotationField& field, const P1Space& space, const NodalField3& m) {
    require_quad(field, space);
    const QuadField s = space.sample(m);
    NodalField3 f = NodalField3::Zero(static_cast<Eigen::Index>(space.num_nodes()), 3);
    const int dim = space.dim();
    const int nd = space.local_dofs();
    for (std::size_t c = 0; c < space.num_cells(); ++c) {
        for (int iq = 0; iq < space.quad_per_cell(); ++iq) {
            const std::size_t p = space.quad_index(c, iq);
            const double w = space.quad_weight(c, iq);
            const Mat3 P = rotated_gradient(field, p, s.value[p], s.grad[p]);
            const Mat3& z = field.Z_quad(p);
            Vec3 a = Vec3::Zero();
            Mat3 b = Mat3::Zero();
            for (int d = 0; d < dim; ++d) {
                a += field.xi_quad(p, d).transpose() * P.col(d);
                b.col(d) = z.transpose() * P.col(d) - s.grad[p].col(d);
            }
            for (int l = 0; l < nd; ++l) {
                const Vec3 contrib = space.basis_value(iq, l) * a + b * space.basis_gradient(c, l);
                f.row(space.global_index(c, l)) += w * contrib.transpose();
            }
        }
    }
    return f;
}

double compute_F_direct(const WienerPath& path, const NoiseCoefficients& coeffs, const P1Space& space,
                        const NodalField3& u, const NodalField3& v, int j) {
    if (j < 0 || j > path.steps) {
        throw InvalidArgument("time index " + std::to_string(j) + " outside the path's " +
                              std::to_string(path.steps) + " steps");
    }
    if (path.q != coeffs.q()) throw MismatchError("path dimension does not match the noise coefficients");
    RotationField field = RotationField::for_quadrature(space, coeffs);
    const QuadField su = space.sample(u);
    const QuadField sv = space.sample(v);
    const double k = path.step_size();
    const int dim = space.dim();
    const int q = coeffs.q();
    double total = 0.0;
    for (int s = 0; s < j; ++s) {
        double step_sum = 0.0;
        for (std::size_t c = 0; c < space.num_cells(); ++c) {
            for (int iq = 0; iq < space.quad_per_cell(); ++iq) {
                const std::size_t p = space.quad_index(c, iq);
                const Mat3& z = field.Z_quad(p);
                const Vec3 zu = z * su.value[p];
                const Vec3 zv = z * sv.value[p];
                const Mat3 U = rotated_gradient(field, p, su.value[p], su.grad[p]);
                const Mat3 V = rotated_gradient(field, p, sv.value[p], sv.grad[p]);
                double local = 0.0;
                for (int i = 0; i < q; ++i) {
                    const PointOperators ops = point_operators(field.g_quad(p, i), field.dg_quad(p, i));
                    double f1 = 0.0, f2 = 0.0;
                    for (int d = 0; d < dim; ++d) {
                        const Mat3 A = 0.5 * ops.H[d] - ops.G * ops.I[d];
                        const Vec3 izu = ops.I[d] * zu;
                        const Vec3 izv = ops.I[d] * zv;
                        f1 += U.col(d).dot(A * zv) + (A * zu).dot(V.col(d)) + izu.dot(izv);
                        f2 += U.col(d).dot(izv) + izu.dot(V.col(d));
                    }
                    local += f1 * k + f2 * path.increment(s, i);
                }
                step_sum += space.quad_weight(c, iq) * local;
            }
        }
        total += step_sum;
        field.evolve_to(path, s + 1);
    }
    return total;
}

void write_Z_csv(std::ostream& os, const RotationField& field) {
    os << "node,z11,z12,z13,z21,z22,z23,z31,z32,z33\n" << std::setprecision(17);
    for (std::size_t n = 0; n < field.num_nodes(); ++n) {
        const Mat3& z = field.Z_node(n);
        os << n;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) os << ',' << z(r, c);
        }
        os << '\n';
    }
}

}  // namespace sllg
