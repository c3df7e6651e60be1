#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "sllg/errors.hpp"
#include "sllg/fem.hpp"
#include "sllg/mesh.hpp"

using namespace sllg;

namespace {

Mesh single_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
    Mesh m;
    m.dim = 2;
    m.vertices = {a, b, c};
    m.cells = {{0, 1, 2, -1}};
    return m;
}

NodalField3 random_field(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> len(lo, hi);
    NodalField3 u(static_cast<Eigen::Index>(n), 3);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        Vec3 d(g(rng), g(rng), g(rng));
        u.row(i) = (len(rng) * d.normalized()).transpose();
    }
    return u;
}

}  // namespace

TEST(StructuredMesh, CountsMatchClosedForms) {
    const Mesh a = build_structured_mesh(2, 1);
    EXPECT_EQ(a.num_cells(), 2u);
    EXPECT_EQ(a.num_vertices(), 4u);
    for (int n : {2, 4, 7}) {
        const Mesh m = build_structured_mesh(2, n);
        EXPECT_EQ(m.num_cells(), static_cast<std::size_t>(2 * n * n));
        EXPECT_EQ(m.num_vertices(), static_cast<std::size_t>((n + 1) * (n + 1)));
    }
    const Mesh c = build_structured_mesh(3, 2);
    EXPECT_EQ(c.num_cells(), 48u);
    EXPECT_EQ(c.num_vertices(), 27u);
}

TEST(StructuredMesh, ZeroDivisionsRejected) {
    EXPECT_THROW(build_structured_mesh(2, 0), InvalidArgument);
    EXPECT_THROW(build_structured_mesh(3, -1), InvalidArgument);
    EXPECT_THROW(build_structured_mesh(4, 2), InvalidArgument);
}

TEST(StructuredMesh, ValidPositiveAndFillsDomain) {
    for (int dim : {2, 3}) {
        const Mesh m = build_structured_mesh(dim, 3);
        EXPECT_NO_THROW(m.validate());
        for (std::size_t c = 0; c < m.num_cells(); ++c) EXPECT_GT(m.signed_measure(c), 0.0);
        EXPECT_NEAR(m.domain_measure(), 1.0, 1e-14);
        EXPECT_NEAR(m.max_edge_length(), std::sqrt(static_cast<double>(dim)) / 3.0, 1e-14);
    }
}

TEST(StructuredMesh, BoundaryFacetCount) {
    // 4n edges on the square boundary, 2 triangles per face square on the cube
    EXPECT_EQ(build_structured_mesh(2, 5).boundary_facets().size(), 20u);
    EXPECT_EQ(build_structured_mesh(3, 2).boundary_facets().size(), 6u * 4u * 2u);
}

TEST(MeshValidate, RejectsBadIndexAndDegenerateCell) {
    Mesh m = build_structured_mesh(2, 1);
    m.cells[0][1] = 17;
    EXPECT_THROW(m.validate(), InvalidArgument);
    const Mesh flat = single_triangle(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0));
    EXPECT_THROW(flat.validate(), InvalidArgument);
}

TEST(MeshIO, RoundTripIsBitExact) {
    Mesh m = build_structured_mesh(3, 2);
    m.vertices[5] += Vec3(1.0 / 3.0, 1e-17, -2.0 / 7.0);
    std::stringstream ss;
    write_mesh(ss, m);
    const Mesh r = read_mesh(ss);
    ASSERT_EQ(r.num_vertices(), m.num_vertices());
    ASSERT_EQ(r.num_cells(), m.num_cells());
    for (std::size_t v = 0; v < m.num_vertices(); ++v) EXPECT_EQ(r.vertices[v], m.vertices[v]);
    for (std::size_t c = 0; c < m.num_cells(); ++c) EXPECT_EQ(r.cells[c], m.cells[c]);
}

TEST(MeshIO, TruncatedInputRejected) {
    std::stringstream ss("2 4 2\n0 0\n1 0\n");
    EXPECT_THROW(read_mesh(ss), InvalidArgument);
}

TEST(P1Space, PartitionOfUnityAndQuadratureWeights) {
    for (int dim : {2, 3}) {
        const P1Space space(build_structured_mesh(dim, 2));
        for (int q = 0; q < space.quad_per_cell(); ++q) {
            double s = 0.0;
            for (int a = 0; a < space.local_dofs(); ++a) s += space.basis_value(q, a);
            EXPECT_NEAR(s, 1.0, 1e-15);
        }
        double total = 0.0;
        for (std::size_t c = 0; c < space.num_cells(); ++c) {
            Vec3 gsum = Vec3::Zero();
            for (int a = 0; a < space.local_dofs(); ++a) gsum += space.basis_gradient(c, a);
            EXPECT_LT(gsum.norm(), 1e-12);
            for (int q = 0; q < space.quad_per_cell(); ++q) total += space.quad_weight(c, q);
        }
        EXPECT_NEAR(total, 1.0, 1e-14);
    }
}

TEST(P1Space, QuadratureExactForQuadratics) {
    // ∫ x², ∫ xy, ∫ y² over the unit square/cube
    for (int dim : {2, 3}) {
        const P1Space space(build_structured_mesh(dim, 3));
        double xx = 0.0, xy = 0.0;
        for (std::size_t c = 0; c < space.num_cells(); ++c) {
            for (int q = 0; q < space.quad_per_cell(); ++q) {
                const Vec3& x = space.quad_points()[space.quad_index(c, q)];
                xx += space.quad_weight(c, q) * x[0] * x[0];
                xy += space.quad_weight(c, q) * x[0] * x[1];
            }
        }
        EXPECT_NEAR(xx, 1.0 / 3.0, 1e-14);
        EXPECT_NEAR(xy, 1.0 / 4.0, 1e-14);
    }
}

TEST(Stiffness, SymmetricWithConstantKernel) {
    for (int dim : {2, 3}) {
        const P1Space space(build_structured_mesh(dim, 3));
        const SparseMatrix k = assemble_stiffness(space);
        const Eigen::MatrixXd d(k);
        EXPECT_LE((d - d.transpose()).cwiseAbs().maxCoeff(), 1e-14);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.rows());
        EXPECT_LE((k * ones).cwiseAbs().maxCoeff(), 1e-12);
        // positive semi-definite
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d);
        EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
    }
}

TEST(Stiffness, LinearFieldEnergyIsExact) {
    // u = (x, 0, 0): ∫|∇u|² = 1; u = (x, 2y, 0): 1 + 4
    for (int dim : {2, 3}) {
        const P1Space space(build_structured_mesh(dim, 4));
        const SparseMatrix k = assemble_stiffness(space);
        const NodalField3 u = interpolate_nodal([](const Vec3& x) { return Vec3(x[0], 0, 0); }, space);
        EXPECT_NEAR(dirichlet_energy(k, u), 1.0, 1e-12);
        const NodalField3 w = interpolate_nodal([](const Vec3& x) { return Vec3(x[0], 2 * x[1], 0); }, space);
        EXPECT_NEAR(dirichlet_energy(k, w), 5.0, 1e-12);
    }
}

TEST(Stiffness, TwoDimensionalScaleInvariance) {
    Mesh m = build_structured_mesh(2, 3);
    const SparseMatrix k1 = assemble_stiffness(P1Space(m));
    for (auto& v : m.vertices) v *= 3.7;
    const SparseMatrix k2 = assemble_stiffness(P1Space(m));
    EXPECT_LE(Eigen::MatrixXd(k1 - k2).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Stiffness, DegenerateCellNamed) {
    Mesh m = build_structured_mesh(2, 2);
    m.vertices.push_back(Vec3(3, 0, 0));
    m.vertices.push_back(Vec3(4, 0, 0));
    m.vertices.push_back(Vec3(5, 0, 0));
    const auto n = static_cast<std::int32_t>(m.vertices.size());
    m.cells.push_back({n - 3, n - 2, n - 1, -1});
    const P1Space space(m);
    try {
        (void)assemble_stiffness(space);
        FAIL() << "expected AssemblyError";
    } catch (const AssemblyError& e) {
        EXPECT_EQ(e.cell(), m.num_cells() - 1);
    }
}

TEST(OffdiagCondition, StructuredMeshesHold) {
    EXPECT_TRUE(check_offdiag_condition(P1Space(build_structured_mesh(2, 5))).holds);
    EXPECT_TRUE(check_offdiag_condition(P1Space(build_structured_mesh(3, 3))).holds);
}

TEST(OffdiagCondition, ObtuseTriangleFailsOnOppositeEdge) {
    const P1Space space(single_triangle(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, 0.05, 0)));
    const OffdiagReport r = check_offdiag_condition(space);
    EXPECT_FALSE(r.holds);
    // obtuse angle at vertex 2, opposite edge joins vertices 0 and 1
    EXPECT_EQ(std::min(r.worst_row, r.worst_col), 0);
    EXPECT_EQ(std::max(r.worst_row, r.worst_col), 1);
    EXPECT_GT(r.worst_value, 0.0);
    // cot of the obtuse angle gives the entry: -cot(γ)/2
    const Vec3 a = Vec3(0, 0, 0) - Vec3(0.5, 0.05, 0), b = Vec3(1, 0, 0) - Vec3(0.5, 0.05, 0);
    const double cot = a.dot(b) / a.cross(b).norm();
    EXPECT_NEAR(r.worst_value, -0.5 * cot, 1e-12);
}

TEST(OffdiagCondition, RightTriangleHoldsOnItsOwn) {
    EXPECT_TRUE(check_offdiag_condition(P1Space(single_triangle(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)))).holds);
}

TEST(LumpedMass, TraceAndVertexShares) {
    for (int dim : {2, 3}) {
        const SparseMatrix m = assemble_lumped_mass(P1Space(build_structured_mesh(dim, 3)));
        EXPECT_NEAR(Eigen::VectorXd(m.diagonal()).sum(), 1.0, 1e-14);
        EXPECT_EQ(m.nonZeros(), m.rows());
        EXPECT_GT(Eigen::VectorXd(m.diagonal()).minCoeff(), 0.0);
    }
    const P1Space tri(single_triangle(Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 3, 0)));
    const Eigen::VectorXd d = assemble_lumped_mass(tri).diagonal();
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(d[i], 1.0, 1e-15);
}

TEST(LumpedMass, ConstantFieldNormIsDomainMeasure) {
    const P1Space space(build_structured_mesh(2, 4));
    const Eigen::VectorXd d = assemble_lumped_mass(space).diagonal();
    const NodalField3 e1 = interpolate_nodal([](const Vec3&) { return Vec3::UnitX(); }, space);
    EXPECT_NEAR(lumped_pairing(d, e1, e1), 1.0, 1e-14);
}

TEST(Interpolation, ConstantsLinearsAndNonFinite) {
    const P1Space space(build_structured_mesh(2, 3));
    const NodalField3 c = interpolate_nodal([](const Vec3&) { return Vec3(1, -2, 3); }, space);
    for (Eigen::Index n = 0; n < c.rows(); ++n) EXPECT_EQ(c.row(n), Eigen::RowVector3d(1, -2, 3));

    auto lin = [](const Vec3& x) { return Vec3(2 * x[0] - x[1], 1 + x[1], 3 * x[0]); };
    const QuadField s = space.sample(interpolate_nodal(lin, space));
    for (std::size_t p = 0; p < s.value.size(); ++p) {
        EXPECT_LT((s.value[p] - lin(space.quad_points()[p])).norm(), 1e-14);
    }

    try {
        (void)interpolate_nodal([](const Vec3& x) { return x[0] > 0.9 ? Vec3(NAN, 0, 0) : Vec3::UnitX(); }, space);
        FAIL() << "expected NodalError";
    } catch (const NodalError& e) {
        EXPECT_GT(space.mesh().vertices[e.node()][0], 0.9);
    }
}

TEST(Interpolation, SupNormBoundProperty) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3, 3);
    const P1Space space(build_structured_mesh(2, 6));
    for (int trial = 0; trial < 20; ++trial) {
        const double a = u(rng), b = u(rng), c = u(rng);
        auto f = [&](const Vec3& x) { return Vec3(std::sin(a * x[0] + b), std::cos(c * x[1]), a * x[0] * x[1]); };
        const NodalField3 i = interpolate_nodal(f, space);
        double fsup = 0.0;
        for (int s = 0; s <= 60; ++s) {
            for (int t = 0; t <= 60; ++t) fsup = std::max(fsup, f(Vec3(s / 60.0, t / 60.0, 0)).norm());
        }
        // sampled points include every node, so the interpolant's sup is attained there
        EXPECT_LE(i.rowwise().norm().maxCoeff(), fsup + 1e-14);
        const QuadField q = space.sample(i);
        for (const auto& v : q.value) EXPECT_LE(v.norm(), fsup + 1e-14);
    }
}

TEST(Normalize, BasicCasesAndZeroNode) {
    NodalField3 u(3, 3);
    u << 2, 0, 0, 0.6, 0.8, 0, 0, 0, 0;
    try {
        (void)normalize_nodal(u);
        FAIL() << "expected NodalError";
    } catch (const NodalError& e) {
        EXPECT_EQ(e.node(), 2u);
    }
    u.row(2) << 0, 0, -5;
    const NodalField3 n = normalize_nodal(u);
    EXPECT_EQ(n.row(0), Eigen::RowVector3d(1, 0, 0));
    EXPECT_NEAR((n.row(1) - Eigen::RowVector3d(0.6, 0.8, 0)).norm(), 0.0, 1e-16);
    EXPECT_EQ(n.row(2), Eigen::RowVector3d(0, 0, -1));
    for (Eigen::Index i = 0; i < n.rows(); ++i) EXPECT_NEAR(n.row(i).norm(), 1.0, 1e-15);
}

TEST(Normalize, DoesNotIncreaseEnergyOnAcuteMeshes) {
    std::mt19937_64 rng(42);
    for (int dim : {2, 3}) {
        const P1Space space(build_structured_mesh(dim, dim == 2 ? 6 : 3));
        ASSERT_TRUE(check_offdiag_condition(space).holds);
        const SparseMatrix k = assemble_stiffness(space);
        for (int trial = 0; trial < 200; ++trial) {
            const NodalField3 u = random_field(space.num_nodes(), rng, 1.0, 3.0);
            EXPECT_LE(dirichlet_energy(k, normalize_nodal(u)), dirichlet_energy(k, u) + 1e-10);
        }
    }
}

TEST(DiscreteLpNorm, CasesAndEquivalence) {
    const P1Space space(build_structured_mesh(2, 8));
    NodalField3 u = NodalField3::Zero(static_cast<Eigen::Index>(space.num_nodes()), 3);
    EXPECT_EQ(discrete_lp_norm(u, 2.0, 0.125, 2), 0.0);
    u(7, 1) = -4.0;
    u(3, 0) = 2.0;
    EXPECT_EQ(discrete_lp_norm(u, std::numeric_limits<double>::infinity(), 0.125, 2), 4.0);
    EXPECT_THROW((void)discrete_lp_norm(u, 0.5, 0.125, 2), InvalidArgument);

    // constant unit field: h^2 (n+1)^2 against the continuous value 1
    const NodalField3 one = interpolate_nodal([](const Vec3&) { return Vec3::UnitZ(); }, space);
    const double ratio = discrete_lp_norm(one, 2.0, 1.0 / 8.0, 2);
    EXPECT_NEAR(ratio, 9.0 / 8.0, 1e-14);
    EXPECT_GT(ratio, 0.5);
    EXPECT_LT(ratio, 2.0);
}
