#include "obstakit/subspaces.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "obstakit/errors.hpp"
#include "obstakit/operators.hpp"

namespace obstakit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- spaces

std::shared_ptr<const InnerProductSpace> InnerProductSpace::euclidean(int n) {
    return from_gram(MatrixXd::Identity(n, n));
}

std::shared_ptr<const InnerProductSpace> InnerProductSpace::from_gram(MatrixXd gram) {
    if (gram.rows() != gram.cols()) throw InvalidArgument("InnerProductSpace: Gram matrix not square");
    const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidArgument("InnerProductSpace: Gram matrix not symmetric");
    if (gram.rows() > 0 && gram.llt().info() != Eigen::Success)
        throw InvalidArgument("InnerProductSpace: Gram matrix not positive definite");
    auto s = std::shared_ptr<InnerProductSpace>(new InnerProductSpace());
    s->n_ = static_cast<int>(gram.rows());
    s->gram_ = std::move(gram);
    return s;
}

std::shared_ptr<const InnerProductSpace> InnerProductSpace::from_action(int n, GramAction action) {
    auto s = std::shared_ptr<InnerProductSpace>(new InnerProductSpace());
    s->n_ = n;
    s->action_ = std::move(action);
    return s;
}

MatrixXd InnerProductSpace::apply_gram(const MatrixXd& x) const {
    if (x.rows() != n_) throw InvalidArgument("InnerProductSpace: dimension mismatch");
    if (gram_) return *gram_ * x;
    return action_(x);
}

double InnerProductSpace::inner(const VectorXd& x, const VectorXd& y) const { return x.dot(apply_gram(y).col(0)); }

double InnerProductSpace::norm(const VectorXd& x) const { return std::sqrt(std::max(0.0, inner(x, x))); }

double InnerProductSpace::operator_norm(const MatrixXd& t) const {
    if (!gram_) throw InvalidArgument("operator_norm: needs a dense Gram matrix");
    const int blocks = static_cast<int>(t.rows() / std::max(1, n_));
    if (t.rows() != t.cols() || blocks * n_ != t.rows()) throw InvalidArgument("operator_norm: bad shape");
    const MatrixXd l_small = gram_->llt().matrixL();
    MatrixXd l = MatrixXd::Zero(t.rows(), t.cols());
    for (int b = 0; b < blocks; ++b) l.block(b * n_, b * n_, n_, n_) = l_small;
    // |T|_G = |L^T T L^{-T}|_2
    const MatrixXd lt_t = l.transpose() * t;
    const MatrixXd m = l.triangularView<Eigen::Lower>().solve(lt_t.transpose()).transpose();
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
}

// ---------------------------------------------------------------- bases

namespace {

// Extends an orthonormal (basis, gram_basis) by the generators.
void extend(const InnerProductSpace& space, MatrixXd& basis, MatrixXd& gram_basis, const MatrixXd& generators,
            double rank_tol) {
    if (generators.cols() == 0) return;
    const MatrixXd g_orig = space.apply_gram(generators);
    for (Eigen::Index j = 0; j < generators.cols(); ++j) {
        const double orig = std::sqrt(std::max(0.0, generators.col(j).dot(g_orig.col(j))));
        if (!(orig > 0.0)) continue;
        VectorXd v = generators.col(j);
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index k = 0; k < basis.cols(); ++k) v -= basis.col(k) * gram_basis.col(k).dot(v);
        const VectorXd gv = space.apply_gram(v);
        const double nv = std::sqrt(std::max(0.0, v.dot(gv)));
        if (nv < rank_tol * orig) continue;
        basis.conservativeResize(basis.rows(), basis.cols() + 1);
        gram_basis.conservativeResize(gram_basis.rows(), gram_basis.cols() + 1);
        basis.col(basis.cols() - 1) = v / nv;
        gram_basis.col(gram_basis.cols() - 1) = gv / nv;
    }
}

const MatrixXd& checked(const Subspace& w) {
    if (!w.space) throw InvalidArgument("Subspace without a space");
    return w.basis;
}

void same_space(const Subspace& w1, const Subspace& w2) {
    checked(w1);
    checked(w2);
    if (w1.space->dim() != w2.space->dim()) throw InvalidArgument("subspaces live in different spaces");
}

void require_angle(const Subspace& w1, const Subspace& w2, const char* who) {
    const double c0 = min_angle_cosine(w1, w2);
    if (c0 >= kAngleDegeneracy)
        throw AngleDegenerateError(std::string(who) + ": subspaces do not enclose a positive angle (c0 = " +
                                       std::to_string(c0) + ")",
                                   c0);
}

}  // namespace

Subspace orthonormal_basis(const SpacePtr& space, const MatrixXd& generators, double rank_tol) {
    if (!space) throw InvalidArgument("orthonormal_basis: null space");
    if (generators.rows() != space->dim() && generators.cols() > 0)
        throw InvalidArgument("orthonormal_basis: generator length does not match the space");
    Subspace w{space, MatrixXd(space->dim(), 0), MatrixXd(space->dim(), 0)};
    extend(*space, w.basis, w.gram_basis, generators, rank_tol);
    return w;
}

Subspace orthogonal_complement(const Subspace& w, double rank_tol) {
    const int n = w.space->dim();
    MatrixXd basis = w.basis;
    MatrixXd gram_basis = w.gram_basis;
    extend(*w.space, basis, gram_basis, MatrixXd::Identity(n, n), rank_tol);
    const int k = w.dim();
    return {w.space, basis.rightCols(basis.cols() - k), gram_basis.rightCols(gram_basis.cols() - k)};
}

MatrixXd projector(const Subspace& w) {
    checked(w);
    return w.basis * w.gram_basis.transpose();
}

// ---------------------------------------------------------------- angles

double min_angle_cosine(const Subspace& w1, const Subspace& w2) {
    same_space(w1, w2);
    if (w1.dim() == 0 || w2.dim() == 0) return 0.0;
    const MatrixXd c = w1.gram_basis.transpose() * w2.basis;
    const double s = Eigen::JacobiSVD<MatrixXd>(c).singularValues()(0);
    return std::clamp(s, 0.0, 1.0);
}

SineReport min_angle_sine(const Subspace& w1, const Subspace& w2) {
    const double c0 = min_angle_cosine(w1, w2);
    SineReport r;
    r.derived = std::sqrt(std::max(0.0, 1.0 - c0 * c0));
    if (w1.dim() == 0) {
        r.direct = 1.0;
        return r;
    }
    // X = (I - P2) B1 and G X, without further Gram applications
    const MatrixXd coeff = w2.gram_basis.transpose() * w1.basis;
    const MatrixXd x = w1.basis - w2.basis * coeff;
    const MatrixXd gx = w1.gram_basis - w2.gram_basis * coeff;
    MatrixXd k = x.transpose() * gx;
    k = 0.5 * (k + k.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(k, Eigen::EigenvaluesOnly).eigenvalues()(0);
    r.direct = std::sqrt(std::clamp(lmin, 0.0, 1.0));
    return r;
}

// ---------------------------------------------------------------- R1

std::pair<MatrixXd, MatrixXd> r1_apply(const Subspace& w1, const Subspace& w2, const MatrixXd& x,
                                       const MatrixXd& y) {
    same_space(w1, w2);
    const MatrixXd p1 = projector(w1);
    const MatrixXd p2 = projector(w2);
    return {x + p1 * y, p2 * x + y};
}

std::pair<MatrixXd, MatrixXd> r1_apply_inverse(const Subspace& w1, const Subspace& w2, const MatrixXd& a,
                                               const MatrixXd& b, const R1InverseOptions& options) {
    same_space(w1, w2);
    require_angle(w1, w2, "r1_apply_inverse");
    const int n = w1.space->dim();
    if (a.rows() != n || b.rows() != n || a.cols() != b.cols())
        throw InvalidArgument("r1_apply_inverse: block shapes do not match the space");
    const MatrixXd p1 = projector(w1);
    const MatrixXd p2 = projector(w2);
    const MatrixXd shifted = b - p2 * a;
    MatrixXd y;
    if (options.middle == MiddleBlock::dense) {
        const MatrixXd middle = MatrixXd::Identity(n, n) - p2 * p1;
        y = middle.partialPivLu().solve(shifted);
    } else {
        const MatrixXd p21 = p2 * p1;
        MatrixXd term = shifted;
        y = shifted;
        for (int k = 1; k < options.neumann_terms; ++k) {
            term = p21 * term;
            y += term;
        }
    }
    MatrixXd x = a - p1 * y;
    return {std::move(x), std::move(y)};
}

MatrixXd r1_inverse_matrix(const Subspace& w1, const Subspace& w2) {
    const int n = w1.space->dim();
    MatrixXd a = MatrixXd::Zero(n, 2 * n);
    MatrixXd b = MatrixXd::Zero(n, 2 * n);
    a.leftCols(n).setIdentity();
    b.rightCols(n).setIdentity();
    const auto [x, y] = r1_apply_inverse(w1, w2, a, b);
    MatrixXd out(2 * n, 2 * n);
    out.topRows(n) = x;
    out.bottomRows(n) = y;
    return out;
}

MatrixXd project_onto_sum(const Subspace& w1, const Subspace& w2) {
    const auto [x, y] = r1_apply_inverse(w1, w2, projector(w1), projector(w2));
    return x + y;
}

MatrixXd project_onto_sum_closed_form(const Subspace& w1, const Subspace& w2) {
    same_space(w1, w2);
    require_angle(w1, w2, "project_onto_sum_closed_form");
    const int n = w1.space->dim();
    const MatrixXd id = MatrixXd::Identity(n, n);
    const MatrixXd p1 = projector(w1);
    const MatrixXd p2 = projector(w2);
    const MatrixXd inner = (id - p2 * p1).partialPivLu().solve(p2 * (id - p1));
    return p1 + (id - p1) * inner;
}

MatrixXd project_onto_sum_series(const Subspace& w1, const Subspace& w2, int terms) {
    same_space(w1, w2);
    if (terms < 0) throw InvalidArgument("project_onto_sum_series: negative term count");
    const int n = w1.space->dim();
    const MatrixXd p1 = projector(w1);
    const MatrixXd p2 = projector(w2);
    const MatrixXd p21 = p2 * p1;
    const MatrixXd p12 = p1 * p2;
    MatrixXd sum = MatrixXd::Zero(n, n);
    MatrixXd power = MatrixXd::Identity(n, n);  // (P2 P1)^k
    MatrixXd upper = p12;                       // (P1 P2)^{k+1}
    for (int k = 0; k < terms; ++k) {
        const MatrixXd next = p21 * power;
        sum += p1 * power + power * p2 - upper - next;
        power = next;
        upper = p12 * upper;
    }
    return sum;
}

double neumann_identity_deviation(const Subspace& w1, const Subspace& w2) {
    same_space(w1, w2);
    require_angle(w1, w2, "neumann_identity_deviation");
    const int n = w1.space->dim();
    const MatrixXd id = MatrixXd::Identity(n, n);
    const MatrixXd p1 = projector(w1);
    const MatrixXd p2 = projector(w2);
    const MatrixXd lhs = (id - p2 * p1).inverse();
    const MatrixXd rhs = id + p2 * (id - p1 * p2).partialPivLu().solve(p1);
    return (lhs - rhs).cwiseAbs().maxCoeff() / std::max(1.0, lhs.cwiseAbs().maxCoeff());
}

// ---------------------------------------------------------------- FE bridge

BridgeReport fem_angle_bridge(const SparseSPD& a, const NodeSet& o1, const NodeSet& o2) {
    const int n = a.dim();
    if (n > kBridgeDofLimit)
        throw SizeError("fem_angle_bridge: " + std::to_string(n) + " dofs exceeds the dense limit of " +
                        std::to_string(kBridgeDofLimit));
    if (o1.universe() != n || o2.universe() != n)
        throw InvalidArgument("fem_angle_bridge: node sets do not match the matrix");
    if (!o1.unite(o2).is_all())
        throw AngleDegenerateError("fem_angle_bridge: O1 and O2 do not cover all nodes, W1 and W2 intersect", 1.0);

    auto factor = a.factor();
    auto space = InnerProductSpace::from_action(n, [factor](const MatrixXd& x) {
        MatrixXd out(x.rows(), x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = factor->solve(x.col(j));
        return out;
    });

    const MatrixXd dense = a.to_dense();
    auto perp_of_image = [&](const NodeSet& o) {
        MatrixXd gens(n, o.size());
        for (int k = 0; k < o.size(); ++k) gens.col(k) = dense.col(o.indices()[k]);
        return orthogonal_complement(orthonormal_basis(space, gens));
    };
    const Subspace w1 = perp_of_image(o1);
    const Subspace w2 = perp_of_image(o2);

    BridgeReport r;
    r.dofs = n;
    r.cosine = min_angle_cosine(w1, w2);
    const MatrixXd p = project_onto_sum(w1, w2);

    const NodeSet common = o1.intersect(o2);
    MatrixXd a_s(n, n);
    for (int j = 0; j < n; ++j) {
        DualVector e(n);
        e[j] = 1.0;
        a_s.col(j) = a.apply(restricted_poisson(a, common, e).values());
    }
    r.deviation = (MatrixXd::Identity(n, n) - p - a_s).cwiseAbs().maxCoeff();
    return r;
}

}  // namespace obstakit
