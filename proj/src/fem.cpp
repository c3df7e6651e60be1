#include "sllg/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "sllg/errors.hpp"

namespace sllg {

P1Space::P1Space(Mesh mesh) : mesh_(std::move(mesh)) {
    const int dim = mesh_.dim;
    if (dim != 2 && dim != 3) throw InvalidArgument("P1 space needs a 2D or 3D mesh");
    const auto nv = static_cast<std::int32_t>(mesh_.num_vertices());
    for (std::size_t c = 0; c < mesh_.num_cells(); ++c) {
        for (int a = 0; a <= dim; ++a) {
            if (mesh_.cells[c][a] < 0 || mesh_.cells[c][a] >= nv) {
                throw InvalidArgument("cell " + std::to_string(c) + " has vertex index out of range");
            }
        }
    }

    if (dim == 2) {
        const double a = 2.0 / 3.0, b = 1.0 / 6.0;
        ref_bary_ = {{a, b, b, 0.0}, {b, a, b, 0.0}, {b, b, a, 0.0}};
        ref_weights_ = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    } else {
        const double a = 0.5854101966249685, b = 0.1381966011250105;
        ref_bary_ = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
        ref_weights_ = {0.25, 0.25, 0.25, 0.25};
    }

    h_ = mesh_.max_edge_length();
    measure_.resize(mesh_.num_cells());
    grads_.assign(mesh_.num_cells() * 4, Vec3::Zero());
    quad_points_.reserve(num_quad_points());
    for (std::size_t c = 0; c < mesh_.num_cells(); ++c) {
        const auto& cell = mesh_.cells[c];
        measure_[c] = std::abs(mesh_.signed_measure(c));
        Eigen::MatrixXd edges(dim, dim);
        for (int a = 1; a <= dim; ++a) {
            edges.col(a - 1) = (mesh_.vertices[cell[a]] - mesh_.vertices[cell[0]]).head(dim);
        }
        if (measure_[c] > 0.0) {
            // Rows of edges^{-1} are the gradients of barycentric coordinates 1..dim.
            const Eigen::MatrixXd inv = edges.inverse();
            Vec3 sum = Vec3::Zero();
            for (int a = 1; a <= dim; ++a) {
                Vec3 g = Vec3::Zero();
                g.head(dim) = inv.row(a - 1).transpose();
                grads_[c * 4 + a] = g;
                sum += g;
            }
            grads_[c * 4] = -sum;
        }
        for (const auto& bary : ref_bary_) {
            Vec3 x = Vec3::Zero();
            for (int a = 0; a <= dim; ++a) x += bary[a] * mesh_.vertices[cell[a]];
            quad_points_.push_back(x);
        }
    }
}

QuadField P1Space::sample(const NodalField3& u) const {
    QuadField out;
    out.value.assign(num_quad_points(), Vec3::Zero());
    out.grad.assign(num_quad_points(), Mat3::Zero());
    const int nd = local_dofs();
    for (std::size_t c = 0; c < num_cells(); ++c) {
        Mat3 grad = Mat3::Zero();
        for (int a = 0; a < nd; ++a) {
            grad += u.row(global_index(c, a)).transpose() * basis_gradient(c, a).transpose();
        }
        for (int q = 0; q < quad_per_cell(); ++q) {
            Vec3 val = Vec3::Zero();
            for (int a = 0; a < nd; ++a) val += basis_value(q, a) * u.row(global_index(c, a)).transpose();
            out.value[quad_index(c, q)] = val;
            out.grad[quad_index(c, q)] = grad;
        }
    }
    return out;
}

SparseMatrix assemble_stiffness(const P1Space& space) {
    const int nd = space.local_dofs();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(space.num_cells() * nd * nd);
    for (std::size_t c = 0; c < space.num_cells(); ++c) {
        const double vol = space.cell_measure(c);
        if (!(vol > 0.0) || !std::isfinite(vol)) {
            throw AssemblyError(c, "degenerate cell " + std::to_string(c) + " in stiffness assembly");
        }
        for (int a = 0; a < nd; ++a) {
            for (int b = 0; b < nd; ++b) {
                triplets.emplace_back(space.global_index(c, a), space.global_index(c, b),
                                      vol * space.basis_gradient(c, a).dot(space.basis_gradient(c, b)));
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(space.num_nodes());
    SparseMatrix k(n, n);
    k.setFromTriplets(triplets.begin(), triplets.end());
    return k;
}

SparseMatrix assemble_lumped_mass(const P1Space& space) {
    const int nd = space.local_dofs();
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_nodes()));
    for (std::size_t c = 0; c < space.num_cells(); ++c) {
        const double share = space.cell_measure(c) / nd;
        for (int a = 0; a < nd; ++a) diag[space.global_index(c, a)] += share;
    }
    SparseMatrix m(diag.size(), diag.size());
    m.reserve(Eigen::VectorXi::Ones(diag.size()));
    for (Eigen::Index i = 0; i < diag.size(); ++i) m.insert(i, i) = diag[i];
    m.makeCompressed();
    return m;
}

OffdiagReport check_offdiag_condition(const SparseMatrix& stiffness, double tol) {
    OffdiagReport report;
    for (Eigen::Index r = 0; r < stiffness.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(stiffness, r); it; ++it) {
            if (it.col() == r) continue;
            if (it.value() > report.worst_value) {
                report.worst_value = it.value();
                report.worst_row = static_cast<int>(r);
                report.worst_col = static_cast<int>(it.col());
            }
        }
    }
    report.holds = report.worst_row < 0 || report.worst_value <= tol;
    return report;
}

OffdiagReport check_offdiag_condition(const P1Space& space, double tol) {
    return check_offdiag_condition(assemble_stiffness(space), tol);
}

NodalField3 interpolate_nodal(const FieldFunction& f, const P1Space& space) {
    const auto& verts = space.mesh().vertices;
    NodalField3 out(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t n = 0; n < verts.size(); ++n) {
        const Vec3 val = f(verts[n]);
        if (!val.allFinite()) throw NodalError(n, "non-finite field value at node " + std::to_string(n));
        out.row(static_cast<Eigen::Index>(n)) = val.transpose();
    }
    return out;
}

NodalField3 normalize_nodal(const NodalField3& u) {
    NodalField3 out(u.rows(), 3);
    for (Eigen::Index n = 0; n < u.rows(); ++n) {
        const double len = u.row(n).norm();
        if (!(len > 0.0) || !std::isfinite(len)) {
            throw NodalError(static_cast<std::size_t>(n), "cannot normalize node " + std::to_string(n));
        }
        out.row(n) = u.row(n) / len;
    }
    return out;
}

double discrete_lp_norm(const NodalField3& u, double p, double h, int dim) {
    if (!(p >= 1.0)) throw InvalidArgument("discrete Lp norm needs p >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (Eigen::Index n = 0; n < u.rows(); ++n) m = std::max(m, u.row(n).norm());
        return m;
    }
    double sum = 0.0;
    for (Eigen::Index n = 0; n < u.rows(); ++n) sum += std::pow(u.row(n).norm(), p);
    return std::pow(std::pow(h, dim) * sum, 1.0 / p);
}

double stiffness_pairing(const SparseMatrix& stiffness, const NodalField3& u, const NodalField3& v) {
    const NodalField3 ku = stiffness * u;
    return ku.cwiseProduct(v).sum();
}

double dirichlet_energy(const SparseMatrix& stiffness, const NodalField3& u) {
    return stiffness_pairing(stiffness, u, u);
}

double lumped_pairing(const Eigen::VectorXd& lumped, const NodalField3& u, const NodalField3& v) {
    double sum = 0.0;
    for (Eigen::Index n = 0; n < u.rows(); ++n) sum += lumped[n] * u.row(n).dot(v.row(n));
    return sum;
}

}  // namespace sllg
