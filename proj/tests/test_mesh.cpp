#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include "obstakit/errors.hpp"
#include "obstakit/mesh.hpp"
#include "obstakit/operators.hpp"

using namespace obstakit;

namespace {

double signed_area(const StructuredTriMesh& m, const std::array<int, 3>& t) {
    const auto& a = m.node_coords[t[0]];
    const auto& b = m.node_coords[t[1]];
    const auto& c = m.node_coords[t[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

// Independent element integration: hat-function gradients from the inverse
// Jacobian of each triangle, integrated exactly (they are constant).
Eigen::MatrixXd integrate_stiffness(const StructuredTriMesh& m) {
    const int n = m.num_dofs();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : m.triangles) {
        Eigen::Matrix3d coords;
        for (int v = 0; v < 3; ++v) coords.row(v) << 1.0, m.node_coords[t[v]][0], m.node_coords[t[v]][1];
        // columns of inv(coords) hold the affine coefficients of each hat
        const Eigen::Matrix3d c = coords.inverse();
        const double area = std::abs(signed_area(m, t));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const int di = m.dof_of_node[t[i]], dj = m.dof_of_node[t[j]];
                if (di < 0 || dj < 0) continue;
                a(di, dj) += area * (c(1, i) * c(1, j) + c(2, i) * c(2, j));
            }
    }
    return a;
}

// Gauss-Legendre quadrature of the H_0^1 energy of x1(1-x1)x2(1-x2).
double quadrature_energy() {
    const double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
    const double weights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};
    double sum = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double x = 0.5 * (nodes[i] + 1.0), y = 0.5 * (nodes[j] + 1.0);
            const double gx = (1.0 - 2.0 * x) * y * (1.0 - y);
            const double gy = (1.0 - 2.0 * y) * x * (1.0 - x);
            sum += 0.25 * weights[i] * weights[j] * (gx * gx + gy * gy);
        }
    return sum;
}

}  // namespace

TEST(Mesh, Counts) {
    for (int n : {2, 4, 9}) {
        const auto m = friedrichs_keller(n);
        EXPECT_EQ(m.num_nodes(), (n + 1) * (n + 1));
        EXPECT_EQ(static_cast<int>(m.triangles.size()), 2 * n * n);
        EXPECT_EQ(m.num_dofs(), (n - 1) * (n - 1));
        EXPECT_EQ(m.num_dofs() + static_cast<int>(m.boundary_ids.size()), m.num_nodes());
    }
    const auto m2 = friedrichs_keller(2);
    ASSERT_EQ(m2.num_dofs(), 1);
    EXPECT_DOUBLE_EQ(m2.dof_coords(0)[0], 0.5);
    EXPECT_DOUBLE_EQ(m2.dof_coords(0)[1], 0.5);
    EXPECT_THROW(friedrichs_keller(1), InvalidArgument);
}

TEST(Mesh, TrianglesPositiveAndConsistentlySplit) {
    const auto m = friedrichs_keller(6);
    for (const auto& t : m.triangles) {
        EXPECT_NEAR(signed_area(m, t), 0.5 * m.h * m.h, 1e-15);
        // every triangle has exactly one edge along the (1, 1) direction
        int diagonals = 0;
        for (int e = 0; e < 3; ++e) {
            const auto& p = m.node_coords[t[e]];
            const auto& q = m.node_coords[t[(e + 1) % 3]];
            const double dx = q[0] - p[0], dy = q[1] - p[1];
            if (std::abs(dx) > 1e-14 && std::abs(dy) > 1e-14) {
                EXPECT_NEAR(dx, dy, 1e-14);
                ++diagonals;
            }
        }
        EXPECT_EQ(diagonals, 1);
    }
}

TEST(Mesh, BoundaryClassification) {
    const auto m = friedrichs_keller(5);
    for (int id = 0; id < m.num_nodes(); ++id) {
        const auto& p = m.node_coords[id];
        const bool on_boundary = p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0;
        EXPECT_EQ(on_boundary, m.dof_of_node[id] < 0);
    }
    EXPECT_TRUE(std::is_sorted(m.interior_ids.begin(), m.interior_ids.end()));
}

TEST(Mesh, StiffnessSmallestCase) {
    const auto a = assemble_stiffness(friedrichs_keller(2));
    ASSERT_EQ(a.dim(), 1);
    EXPECT_NEAR(a.entry(0, 0), 4.0, 1e-14);
    EXPECT_NEAR(integrate_stiffness(friedrichs_keller(2))(0, 0), 4.0, 1e-14);
}

TEST(Mesh, StiffnessMatchesElementIntegration) {
    for (int n : {3, 6, 11}) {
        const auto m = friedrichs_keller(n);
        const Eigen::MatrixXd oracle = integrate_stiffness(m);
        EXPECT_LE((assemble_stiffness(m).to_dense() - oracle).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(Mesh, StiffnessStencil) {
    const auto m = friedrichs_keller(8);
    const auto a = assemble_stiffness(m);
    const Eigen::MatrixXd d = a.to_dense();
    for (int i = 0; i < a.dim(); ++i) {
        EXPECT_NEAR(d(i, i), 4.0, 1e-14);
        double row = 0.0;
        for (int j = 0; j < a.dim(); ++j) {
            row += d(i, j);
            if (i == j) continue;
            EXPECT_LE(d(i, j), 1e-15);
            const auto& p = m.dof_coords(i);
            const auto& q = m.dof_coords(j);
            const double dx = std::abs(p[0] - q[0]), dy = std::abs(p[1] - q[1]);
            const bool axis = (dx < 1e-12 && std::abs(dy - m.h) < 1e-12) || (dy < 1e-12 && std::abs(dx - m.h) < 1e-12);
            EXPECT_NEAR(d(i, j), axis ? -1.0 : 0.0, 1e-14);
        }
        EXPECT_GE(row, -1e-14);
    }
    EXPECT_NO_THROW(a.factor());
}

TEST(Mesh, MassValues) {
    const auto m = friedrichs_keller(4);
    const Eigen::MatrixXd c = assemble_mass(m, MassVariant::consistent).to_dense();
    const Eigen::MatrixXd l = assemble_mass(m, MassVariant::lumped).to_dense();
    const double h2 = m.h * m.h;
    // the centre node (2, 2) is fully interior with six interior neighbours
    const int centre = 4;
    EXPECT_NEAR(c(centre, centre), h2 / 2.0, 1e-15);
    EXPECT_NEAR(c.row(centre).sum(), h2, 1e-15);
    int neighbours = 0;
    for (int j = 0; j < c.cols(); ++j)
        if (j != centre && c(centre, j) != 0.0) {
            EXPECT_NEAR(c(centre, j), h2 / 12.0, 1e-15);
            ++neighbours;
        }
    EXPECT_EQ(neighbours, 6);
    EXPECT_NEAR(l(centre, centre), 1.0 / 16.0, 1e-15);
    EXPECT_NEAR((l - Eigen::MatrixXd(l.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0, 0.0);
    for (int n : {2, 5, 16}) {
        const auto mm = friedrichs_keller(n);
        EXPECT_LE(assemble_mass(mm).to_dense().sum(), 1.0);
        EXPECT_LE(assemble_mass(mm, MassVariant::lumped).to_dense().sum(), 1.0 + 1e-14);
    }
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(c).info(), Eigen::Success);
}

TEST(Mesh, Interpolation) {
    const auto m = friedrichs_keller(2);
    const NodalField v = interpolate(m, [](double x, double y) { return 10.0 * (-x - y + 1.0); });
    ASSERT_EQ(v.size(), 1);
    EXPECT_EQ(v[0], 0.0);
    const auto m4 = friedrichs_keller(4);
    const NodalField w = interpolate(m4, [](double x, double y) { return x + 10.0 * y; });
    for (int i = 0; i < m4.num_dofs(); ++i) EXPECT_DOUBLE_EQ(w[i], m4.dof_coords(i)[0] + 10.0 * m4.dof_coords(i)[1]);
    EXPECT_THROW(interpolate(m4, [](double, double) { return std::nan(""); }), InvalidInput);
    const auto all = to_all_nodes(m4, w.values());
    EXPECT_EQ(static_cast<int>(all.size()), m4.num_nodes());
    for (int b : m4.boundary_ids) EXPECT_EQ(all[b], 0.0);
}

TEST(Mesh, EnergyConvergesToQuadratureOracle) {
    const double exact = quadrature_energy();
    EXPECT_NEAR(exact, 1.0 / 45.0, 1e-15);
    const auto m = friedrichs_keller(64);
    const NodalField v = interpolate(m, [](double x, double y) { return x * (1 - x) * y * (1 - y); });
    const double e = std::pow(energy_norm(assemble_stiffness(m), v), 2);
    EXPECT_NEAR(e / exact, 1.0, 0.02);
}

TEST(Mesh, DiscreteMaximumPrinciple) {
    const auto m = friedrichs_keller(12);
    const SparseSPD a = assemble_stiffness(m);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd f(a.dim());
    for (int i = 0; i < a.dim(); ++i) f[i] = u(rng);
    const NodalField y = poisson_solve(a, DualVector(f));
    EXPECT_GE(y.values().minCoeff(), 0.0);
}

TEST(Mesh, AssemblyIndependentOfTriangleOrder) {
    auto m = friedrichs_keller(9);
    const Eigen::MatrixXd a0 = assemble_stiffness(m, Exec::serial).to_dense();
    const Eigen::MatrixXd m0 = assemble_mass(m, MassVariant::consistent, Exec::serial).to_dense();
    std::mt19937_64 rng(3);
    std::shuffle(m.triangles.begin(), m.triangles.end(), rng);
    for (auto& t : m.triangles) std::rotate(t.begin(), t.begin() + 1, t.end());
    EXPECT_LE((assemble_stiffness(m, Exec::serial).to_dense() - a0).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((assemble_stiffness(m, Exec::parallel).to_dense() - a0).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((assemble_mass(m, MassVariant::consistent, Exec::serial).to_dense() - m0).cwiseAbs().maxCoeff(),
              1e-16);
}
