#pragma once

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "sllg/mesh.hpp"

namespace sllg {

/// N nodal vectors in R^3, one row per mesh vertex.
using NodalField3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Values and spatial gradients of an R^3-valued field at every quadrature
/// point of a space. `grad[q].col(d)` is the derivative along x_d; columns
/// beyond the mesh dimension are zero.
struct QuadField {
    std::vector<Vec3> value;
    std::vector<Mat3> grad;
};

/// Continuous piecewise-linear Lagrange space on a simplicial mesh with a
/// degree-2 exact quadrature rule (3 points per triangle, 4 per tetrahedron).
/// Immutable after construction.
class P1Space {
public:
    explicit P1Space(Mesh mesh);

    [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }
    [[nodiscard]] int dim() const noexcept { return mesh_.dim; }
    [[nodiscard]] std::size_t num_nodes() const noexcept { return mesh_.num_vertices(); }
    [[nodiscard]] std::size_t num_cells() const noexcept { return mesh_.num_cells(); }
    [[nodiscard]] int local_dofs() const noexcept { return mesh_.dim + 1; }
    [[nodiscard]] int quad_per_cell() const noexcept { return static_cast<int>(ref_weights_.size()); }
    [[nodiscard]] std::size_t num_quad_points() const noexcept { return num_cells() * quad_per_cell(); }
    /// Mesh size h (longest edge).
    [[nodiscard]] double h() const noexcept { return h_; }

    [[nodiscard]] std::int32_t global_index(std::size_t cell, int local) const { return mesh_.cells[cell][local]; }
    [[nodiscard]] double cell_measure(std::size_t cell) const { return measure_[cell]; }
    /// Constant gradient of the local basis function `local` on `cell`.
    [[nodiscard]] const Vec3& basis_gradient(std::size_t cell, int local) const {
        return grads_[cell * 4 + local];
    }
    /// Value of local basis function `local` at reference quadrature point `q`.
    [[nodiscard]] double basis_value(int q, int local) const { return ref_bary_[q][local]; }
    /// Physical weight (measure included) of quadrature point `q` of `cell`.
    [[nodiscard]] double quad_weight(std::size_t cell, int q) const { return measure_[cell] * ref_weights_[q]; }
    /// Flat quadrature point index, cell-major.
    [[nodiscard]] std::size_t quad_index(std::size_t cell, int q) const { return cell * quad_per_cell() + q; }
    [[nodiscard]] const std::vector<Vec3>& quad_points() const noexcept { return quad_points_; }

    /// Samples a P1 field and its gradient at every quadrature point.
    [[nodiscard]] QuadField sample(const NodalField3& u) const;

private:
    Mesh mesh_;
    double h_ = 0.0;
    std::vector<double> measure_;
    std::vector<Vec3> grads_;
    std::vector<double> ref_weights_;
    std::vector<std::array<double, 4>> ref_bary_;
    std::vector<Vec3> quad_points_;
};

/// K_ij = integral of grad(phi_i) . grad(phi_j). Throws AssemblyError on a
/// degenerate cell.
SparseMatrix assemble_stiffness(const P1Space& space);

/// Diagonal matrix of nodal quadrature weights: cell measure split equally
/// among the cell's vertices.
SparseMatrix assemble_lumped_mass(const P1Space& space);

struct OffdiagReport {
    bool holds = true;
    int worst_row = -1;
    int worst_col = -1;
    double worst_value = -std::numeric_limits<double>::infinity();
};

/// Checks that every off-diagonal stiffness entry is <= tol. Under this
/// condition nodal normalization does not increase the Dirichlet energy.
OffdiagReport check_offdiag_condition(const P1Space& space, double tol = 1e-12);
OffdiagReport check_offdiag_condition(const SparseMatrix& stiffness, double tol = 1e-12);

using FieldFunction = std::function<Vec3(const Vec3&)>;

/// Nodal interpolant. Throws NodalError naming the first node where f is not finite.
NodalField3 interpolate_nodal(const FieldFunction& f, const P1Space& space);

/// Pointwise u(x_n)/|u(x_n)|. Throws NodalError on a zero or non-finite node.
NodalField3 normalize_nodal(const NodalField3& u);

/// (h^d sum_n |u(x_n)|^p)^(1/p); for p = infinity the max nodal norm.
double discrete_lp_norm(const NodalField3& u, double p, double h, int dim);

/// Sum over components of u_c^T K u_c, i.e. the Dirichlet energy ||grad u||^2.
double dirichlet_energy(const SparseMatrix& stiffness, const NodalField3& u);
/// Sum over components of u_c^T K v_c.
double stiffness_pairing(const SparseMatrix& stiffness, const NodalField3& u, const NodalField3& v);
/// Lumped L2 pairing sum_n M_n u_n . v_n.
double lumped_pairing(const Eigen::VectorXd& lumped, const NodalField3& u, const NodalField3& v);

}  // namespace sllg
