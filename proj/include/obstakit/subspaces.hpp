#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>

#include <Eigen/Core>

#include "obstakit/sparse.hpp"

namespace obstakit {

/// R^n with <x, y> = x^T G y for an SPD Gram matrix G. G is held either as a
/// dense matrix or only through its action (e.g. A^{-1} applied by solves).
class InnerProductSpace {
public:
    using GramAction = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

    static std::shared_ptr<const InnerProductSpace> euclidean(int n);
    /// Throws InvalidArgument unless the matrix is symmetric positive definite.
    static std::shared_ptr<const InnerProductSpace> from_gram(Eigen::MatrixXd gram);
    static std::shared_ptr<const InnerProductSpace> from_action(int n, GramAction action);

    int dim() const noexcept { return n_; }
    /// G X, column by column.
    Eigen::MatrixXd apply_gram(const Eigen::MatrixXd& x) const;
    double inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    double norm(const Eigen::VectorXd& x) const;
    const std::optional<Eigen::MatrixXd>& dense_gram() const noexcept { return gram_; }

    /// Operator norm of a linear map H -> H (n x n) or H^2 -> H^2 (2n x 2n,
    /// product norm), via dense singular values. Needs a dense Gram.
    double operator_norm(const Eigen::MatrixXd& t) const;

private:
    InnerProductSpace() = default;
    int n_ = 0;
    std::optional<Eigen::MatrixXd> gram_;
    GramAction action_;
};

using SpacePtr = std::shared_ptr<const InnerProductSpace>;

/// Subspace held by a Gram-orthonormal basis (columns of `basis`).
struct Subspace {
    SpacePtr space;
    Eigen::MatrixXd basis;
    /// G * basis, kept so projectors need no further Gram applications.
    Eigen::MatrixXd gram_basis;

    int dim() const { return static_cast<int>(basis.cols()); }
};

/// Gram-orthonormal basis of span(generators) by twice-iterated modified
/// Gram-Schmidt. A generator whose remaining Gram norm falls below
/// rank_tol times its original norm is dropped.
Subspace orthonormal_basis(const SpacePtr& space, const Eigen::MatrixXd& generators, double rank_tol = 1e-10);

/// Orthonormal basis of the orthogonal complement of w.
Subspace orthogonal_complement(const Subspace& w, double rank_tol = 1e-10);

/// P_W = B (G B)^T; idempotent and G-self-adjoint.
Eigen::MatrixXd projector(const Subspace& w);

/// c0(W1, W2): largest singular value of B1^T G B2. Zero if either is {0}.
double min_angle_cosine(const Subspace& w1, const Subspace& w2);

struct SineReport {
    /// sqrt(1 - c0^2)
    double derived = 0.0;
    /// min over unit x in W1 of dist(x, W2), from the explicit residual (I - P2) B1.
    double direct = 0.0;
};
SineReport min_angle_sine(const Subspace& w1, const Subspace& w2);

/// Largest c0 accepted by operations that need a positive angle.
inline constexpr double kAngleDegeneracy = 1.0 - 1e-12;

enum class MiddleBlock { dense, neumann };

struct R1InverseOptions {
    MiddleBlock middle = MiddleBlock::dense;
    /// Truncation of sum_k (P2 P1)^k in Neumann mode.
    int neumann_terms = 200;
};

/// R1 (x, y) = (x + P1 y, P2 x + y), applied column-wise to n x m blocks.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> r1_apply(const Subspace& w1, const Subspace& w2,
                                                     const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Solves R1 (x, y) = (a, b) through the block-triangular factorization with
/// middle block (I - P2 P1)^{-1}. Throws AngleDegenerateError if c0 >= 1 - 1e-12.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> r1_apply_inverse(const Subspace& w1, const Subspace& w2,
                                                             const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                                             const R1InverseOptions& options = {});

/// R1^{-1} as a dense 2n x 2n matrix.
Eigen::MatrixXd r1_inverse_matrix(const Subspace& w1, const Subspace& w2);

/// Orthogonal projection onto W1 + W2 as (I I) R1^{-1} (P1; P2).
Eigen::MatrixXd project_onto_sum(const Subspace& w1, const Subspace& w2);

/// P1 + (I - P1)(I - P2 P1)^{-1} P2 (I - P1).
Eigen::MatrixXd project_onto_sum_closed_form(const Subspace& w1, const Subspace& w2);

/// Partial sum of the symmetric series
/// (P1 + P2) - (P1 P2 + P2 P1) + (P1 P2 P1 + P2 P1 P2) - ...
/// grouped as terms k = 0..terms-1 of
/// P1 (P2 P1)^k + (P2 P1)^k P2 - (P1 P2)^{k+1} - (P2 P1)^{k+1}.
Eigen::MatrixXd project_onto_sum_series(const Subspace& w1, const Subspace& w2, int terms);

/// max |(I - P2 P1)^{-1} - (I + P2 (I - P1 P2)^{-1} P1)| / max(1, max |(I - P2 P1)^{-1}|).
/// Both sides carry round-off of order eps / (1 - c0)^2, hence the scaling.
double neumann_identity_deviation(const Subspace& w1, const Subspace& w2);

struct BridgeReport {
    int dofs = 0;
    double cosine = 0.0;
    /// max |(I - P) - A S(O1 n O2)| over all entries
    double deviation = 0.0;
};

/// Largest dof count accepted by fem_angle_bridge.
inline constexpr int kBridgeDofLimit = 500;

/// In the load space with Gram A^{-1}, W_i = (A span{e_j : j in O_i})^perp.
/// Builds the projection P onto W1 + W2 and compares I - P with the matrix of
/// A S(O1 n O2). Throws SizeError above kBridgeDofLimit and
/// AngleDegenerateError when O1 u O2 misses a node (then W1 n W2 != {0}).
BridgeReport fem_angle_bridge(const SparseSPD& a, const NodeSet& o1, const NodeSet& o2);

}  // namespace obstakit
