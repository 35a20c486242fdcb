#include <cstdlib>
#include <random>
#include <vector>

#include <gtest/gtest.h>
#include <omp.h>

#include "obstakit/kernels.hpp"
#include "obstakit/mesh.hpp"

using namespace obstakit;
namespace k = obstakit::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST(Kernels, MatvecSerialAndParallelAgreeBitwise) {
    const auto mesh = friedrichs_keller(40);
    const SparseSPD a = assemble_stiffness(mesh);
    const auto x = random_vector(a.dim(), 1);
    std::vector<double> ys(a.dim()), yp(a.dim());
    k::serial::csr_matvec(a.view(), x, ys);
    k::omp::csr_matvec(a.view(), x, yp);
    EXPECT_EQ(ys, yp);
}

TEST(Kernels, DotIsIndependentOfThreadCount) {
    const auto x = random_vector(50000, 2);
    const auto y = random_vector(50000, 3);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const double one = k::omp::dot(x, y);
    omp_set_num_threads(4);
    const double four = k::omp::dot(x, y);
    omp_set_num_threads(saved);
    EXPECT_EQ(one, four);
    EXPECT_NEAR(one, k::serial::dot(x, y), 1e-12 * 50000);
}

TEST(Kernels, AxpyAndXpby) {
    const auto x = random_vector(10000, 4);
    auto ys = random_vector(10000, 5);
    auto yp = ys;
    k::serial::axpy(0.75, x, ys);
    k::omp::axpy(0.75, x, yp);
    EXPECT_EQ(ys, yp);
    k::serial::xpby(x, -1.5, ys);
    k::omp::xpby(x, -1.5, yp);
    EXPECT_EQ(ys, yp);
    auto z = random_vector(3, 6);
    const auto z0 = z;
    const std::vector<double> w{1.0, 2.0, 3.0};
    k::serial::xpby(w, 2.0, z);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(z[i], w[i] + 2.0 * z0[i]);
}

TEST(Kernels, AssemblySerialAndParallelAgreeBitwise) {
    const auto mesh = friedrichs_keller(17);
    for (auto form : {k::ElementForm::stiffness, k::ElementForm::consistent_mass, k::ElementForm::lumped_mass}) {
        const k::TriangleSoup soup{mesh.node_coords, mesh.triangles, mesh.dof_of_node, mesh.num_dofs()};
        const auto s = k::serial::assemble(soup, form);
        const auto p = k::omp::assemble(soup, form);
        ASSERT_EQ(s.size(), p.size());
        for (std::size_t r = 0; r < s.size(); ++r) {
            EXPECT_EQ(s[r].cols, p[r].cols);
            EXPECT_EQ(s[r].vals, p[r].vals);
        }
    }
}

TEST(Kernels, ElementMatrices) {
    const std::array<double, 2> p0{0.0, 0.0}, p1{0.5, 0.0}, p2{0.5, 0.5};
    const double area = 0.125;
    const auto kst = k::element_matrix(p0, p1, p2, k::ElementForm::stiffness);
    const auto kms = k::element_matrix(p0, p1, p2, k::ElementForm::consistent_mass);
    const auto klm = k::element_matrix(p0, p1, p2, k::ElementForm::lumped_mass);
    double mass_total = 0.0, lumped_total = 0.0;
    for (int i = 0; i < 3; ++i) {
        double row = 0.0;
        for (int j = 0; j < 3; ++j) {
            row += kst[i][j];
            EXPECT_DOUBLE_EQ(kst[i][j], kst[j][i]);
            mass_total += kms[i][j];
            lumped_total += klm[i][j];
            if (i != j) EXPECT_EQ(klm[i][j], 0.0);
        }
        EXPECT_NEAR(row, 0.0, 1e-15);
        EXPECT_NEAR(kms[i][i], area / 6.0, 1e-15);
    }
    EXPECT_NEAR(mass_total, area, 1e-15);
    EXPECT_NEAR(lumped_total, area, 1e-15);
}

TEST(Kernels, ThreadCapFromEnvironment) {
    setenv("OBSTAKIT_THREADS", "2", 1);
    EXPECT_EQ(k::configure_threads_from_env(), 2);
    EXPECT_EQ(omp_get_max_threads(), 2);
    unsetenv("OBSTAKIT_THREADS");
}
