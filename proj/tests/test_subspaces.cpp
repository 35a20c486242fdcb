#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "obstakit/errors.hpp"
#include "obstakit/experiments.hpp"
#include "obstakit/mesh.hpp"
#include "obstakit/oracles.hpp"
#include "obstakit/subspaces.hpp"

using namespace obstakit;
using Eigen::MatrixXd;

namespace {

MatrixXd randn(std::mt19937_64& rng, int r, int c) {
    std::normal_distribution<double> d;
    MatrixXd m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = d(rng);
    return m;
}

SpacePtr random_gram_space(std::mt19937_64& rng, int n) {
    const MatrixXd b = randn(rng, n, n);
    MatrixXd g = b * b.transpose() / n + 0.2 * MatrixXd::Identity(n, n);
    return InnerProductSpace::from_gram(0.5 * (g + g.transpose()));
}

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Subspaces, GramValidation) {
    MatrixXd bad(2, 2);
    bad << 1, 2, 2, 1;
    EXPECT_THROW(InnerProductSpace::from_gram(bad), InvalidArgument);
    MatrixXd nonsym(2, 2);
    nonsym << 2, 1, 0, 2;
    EXPECT_THROW(InnerProductSpace::from_gram(nonsym), InvalidArgument);
}

TEST(Subspaces, OrthonormalBasisDropsDependentGenerators) {
    std::mt19937_64 rng(1);
    const auto space = random_gram_space(rng, 6);
    MatrixXd gens = randn(rng, 6, 3);
    gens.col(2) = 2.0 * gens.col(0) - gens.col(1);
    const Subspace w = orthonormal_basis(space, gens);
    EXPECT_EQ(w.dim(), 2);
    const MatrixXd gram = w.basis.transpose() * space->apply_gram(w.basis);
    EXPECT_LE(max_abs(gram - MatrixXd::Identity(2, 2)), 1e-13);
    const MatrixXd p = projector(w);
    EXPECT_LE(max_abs(p * p - p), 1e-13);
    EXPECT_LE(max_abs(p * gens - gens), 1e-12);
    const MatrixXd gp = space->apply_gram(p);
    EXPECT_LE(max_abs(gp - gp.transpose()), 1e-13);
}

TEST(Subspaces, ComplementIsOrthogonal) {
    std::mt19937_64 rng(2);
    const auto space = random_gram_space(rng, 7);
    const Subspace w = orthonormal_basis(space, randn(rng, 7, 3));
    const Subspace c = orthogonal_complement(w);
    EXPECT_EQ(c.dim(), 4);
    EXPECT_LE(min_angle_cosine(w, c), 1e-13);
    EXPECT_LE(max_abs(projector(w) + projector(c) - MatrixXd::Identity(7, 7)), 1e-12);
}

TEST(Subspaces, TwoLinesInThePlane) {
    const auto e2 = InnerProductSpace::euclidean(2);
    const double theta = 0.3;
    const Subspace w1 = orthonormal_basis(e2, Eigen::Vector2d(1.0, 0.0));
    const Subspace w2 = orthonormal_basis(e2, Eigen::Vector2d(std::cos(theta), std::sin(theta)));
    EXPECT_NEAR(min_angle_cosine(w1, w2), std::cos(theta), 1e-15);
    const SineReport s = min_angle_sine(w1, w2);
    EXPECT_NEAR(s.derived, std::sin(theta), 1e-15);
    EXPECT_NEAR(s.direct, std::sin(theta), 1e-15);
    EXPECT_LE(max_abs(project_onto_sum(w1, w2) - MatrixXd::Identity(2, 2)), 1e-13);
    EXPECT_LE(e2->operator_norm(r1_inverse_matrix(w1, w2)), 4.0 / (1.0 - std::cos(theta)));
}

TEST(Subspaces, AxisSpans) {
    const auto e4 = InnerProductSpace::euclidean(4);
    MatrixXd g1 = MatrixXd::Zero(4, 1), g2 = MatrixXd::Zero(4, 2);
    g1(0, 0) = 1.0;
    g2(2, 0) = 1.0;
    g2(3, 1) = 1.0;
    const Subspace w1 = orthonormal_basis(e4, g1), w2 = orthonormal_basis(e4, g2);
    EXPECT_EQ(min_angle_cosine(w1, w2), 0.0);
    MatrixXd expected = MatrixXd::Zero(4, 4);
    expected(0, 0) = expected(2, 2) = expected(3, 3) = 1.0;
    EXPECT_LE(max_abs(project_onto_sum(w1, w2) - expected), 1e-15);
    EXPECT_LE(max_abs(oracles::dense_sum_projector(MatrixXd::Identity(4, 4), g1, g2) - expected), 1e-15);
}

TEST(Subspaces, EmptySecondSubspace) {
    std::mt19937_64 rng(3);
    const auto space = random_gram_space(rng, 5);
    const Subspace w1 = orthonormal_basis(space, randn(rng, 5, 2));
    const Subspace w2 = orthonormal_basis(space, MatrixXd(5, 0));
    EXPECT_EQ(w2.dim(), 0);
    EXPECT_EQ(min_angle_cosine(w1, w2), 0.0);
    EXPECT_LE(max_abs(project_onto_sum(w1, w2) - projector(w1)), 1e-13);
}

TEST(Subspaces, BlockInverseModesAgree) {
    std::mt19937_64 rng(4);
    const auto space = random_gram_space(rng, 12);
    const Subspace w1 = orthonormal_basis(space, randn(rng, 12, 4));
    const Subspace w2 = orthonormal_basis(space, randn(rng, 12, 5));
    const MatrixXd a = randn(rng, 12, 2), b = randn(rng, 12, 2);
    const auto dense = r1_apply_inverse(w1, w2, a, b);
    R1InverseOptions neumann;
    neumann.middle = MiddleBlock::neumann;
    neumann.neumann_terms = 2000;
    const auto series = r1_apply_inverse(w1, w2, a, b, neumann);
    EXPECT_LE(max_abs(dense.first - series.first), 1e-9);
    EXPECT_LE(max_abs(dense.second - series.second), 1e-9);
    const auto back = r1_apply(w1, w2, dense.first, dense.second);
    EXPECT_LE(max_abs(back.first - a), 1e-11);
    EXPECT_LE(max_abs(back.second - b), 1e-11);
}

TEST(Subspaces, DegenerateAngleRejected) {
    std::mt19937_64 rng(5);
    const auto space = random_gram_space(rng, 6);
    MatrixXd g1 = randn(rng, 6, 2), g2 = randn(rng, 6, 2);
    g2.col(1) = g1.col(0);
    const Subspace w1 = orthonormal_basis(space, g1), w2 = orthonormal_basis(space, g2);
    EXPECT_NEAR(min_angle_cosine(w1, w2), 1.0, 1e-12);
    EXPECT_THROW(r1_apply_inverse(w1, w2, MatrixXd::Zero(6, 1), MatrixXd::Zero(6, 1)), AngleDegenerateError);
    try {
        project_onto_sum(w1, w2);
        FAIL() << "expected AngleDegenerateError";
    } catch (const AngleDegenerateError& e) {
        EXPECT_GT(e.cosine(), kAngleDegeneracy);
    }
}

TEST(Subspaces, SeriesConverges) {
    std::mt19937_64 rng(6);
    const auto space = random_gram_space(rng, 10);
    const MatrixXd g1 = randn(rng, 10, 3), g2 = randn(rng, 10, 3);
    const Subspace w1 = orthonormal_basis(space, g1), w2 = orthonormal_basis(space, g2);
    const MatrixXd oracle = oracles::dense_sum_projector(space->apply_gram(MatrixXd::Identity(10, 10)), g1, g2);
    double prev = 1e300;
    for (int terms : {1, 4, 16, 64, 256}) {
        const double err = max_abs(project_onto_sum_series(w1, w2, terms) - oracle);
        EXPECT_LE(err, prev + 1e-14);
        prev = err;
    }
    const double c0 = min_angle_cosine(w1, w2);
    if (std::pow(c0, 2 * 256) < 1e-13) EXPECT_LE(prev, 1e-10);
}

TEST(Subspaces, SeededSuite) {
    const auto r = experiments::subspace_suite(99, 25, 20);
    EXPECT_EQ(r.instances, 25);
    EXPECT_EQ(r.degenerate_rejected, r.degenerate_trials);
    EXPECT_LE(r.max_deviation(), 1e-9);
}

TEST(Subspaces, FemBridge) {
    const auto mesh = friedrichs_keller(5);
    const SparseSPD a = assemble_stiffness(mesh);
    const int n = a.dim();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u;
    for (int k = 0; k < 5; ++k) {
        std::vector<bool> m1(n), m2(n);
        for (int i = 0; i < n; ++i) {
            const double r = u(rng);
            m1[i] = r < 0.6;
            m2[i] = r > 0.3;
        }
        const auto rep = fem_angle_bridge(a, NodeSet::from_mask(m1), NodeSet::from_mask(m2));
        EXPECT_LE(rep.deviation, 1e-9);
        EXPECT_LT(rep.cosine, 1.0);
    }
    EXPECT_THROW(fem_angle_bridge(a, NodeSet({0}, n), NodeSet({1}, n)), AngleDegenerateError);
    const SparseSPD big = assemble_stiffness(friedrichs_keller(24));
    EXPECT_THROW(fem_angle_bridge(big, NodeSet::all(big.dim()), NodeSet::all(big.dim())), SizeError);
}
