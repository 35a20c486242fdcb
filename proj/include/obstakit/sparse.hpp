#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "obstakit/fields.hpp"
#include "obstakit/kernels.hpp"

namespace obstakit {

using CsrMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Sorted, duplicate-free subset of {0, ..., universe-1}; a discrete open set.
class NodeSet {
public:
    NodeSet() = default;
    /// Sorts and deduplicates. Throws InvalidArgument on indices outside the universe.
    NodeSet(std::vector<int> indices, int universe);

    static NodeSet all(int universe);
    static NodeSet none(int universe) { return NodeSet({}, universe); }
    static NodeSet from_mask(const std::vector<bool>& mask);

    int universe() const noexcept { return universe_; }
    int size() const noexcept { return static_cast<int>(indices_.size()); }
    bool empty() const noexcept { return indices_.empty(); }
    bool is_all() const noexcept { return size() == universe_; }
    bool contains(int i) const;
    const std::vector<int>& indices() const noexcept { return indices_; }
    std::vector<bool> mask() const;

    NodeSet complement() const;
    NodeSet intersect(const NodeSet& other) const;
    NodeSet unite(const NodeSet& other) const;
    bool is_subset_of(const NodeSet& other) const;

    bool operator==(const NodeSet& other) const = default;

private:
    std::vector<int> indices_;
    int universe_ = 0;
};

/// Cholesky factor of a principal submatrix A_OO.
class Factorization {
public:
    virtual ~Factorization() = default;
    /// Solves A_OO x = rhs where rhs and x are indexed by position within O.
    virtual Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const = 0;
    virtual const NodeSet& nodes() const = 0;
};

/// Symmetric positive definite sparse matrix in compressed-row storage.
///
/// Cheap to copy: copies share the immutable matrix and the factorization
/// cache. Factorizations are cached per node set (LRU, bounded) because the
/// control loop re-solves on the same restricted set many times; the cache is
/// internally locked and safe for concurrent readers.
class SparseSPD {
public:
    SparseSPD();
    /// Throws InvalidArgument if the matrix is not square or not symmetric.
    explicit SparseSPD(CsrMatrix matrix);
    static SparseSPD from_rows(const std::vector<kernels::SparseRow>& rows);
    static SparseSPD from_dense(const Eigen::MatrixXd& dense);

    int dim() const;
    const CsrMatrix& matrix() const;
    kernels::CsrView view() const;
    Eigen::MatrixXd to_dense() const;
    double entry(int row, int col) const;

    Eigen::VectorXd apply(const Eigen::VectorXd& x, kernels::Exec exec = kernels::Exec::parallel) const;
    DualVector apply(const NodalField& x) const { return DualVector(apply(x.values())); }
    Eigen::VectorXd diagonal() const;

    /// Cached Cholesky factor of A restricted to `nodes`. Throws NotSpdError.
    std::shared_ptr<const Factorization> factor(const NodeSet& nodes) const;
    std::shared_ptr<const Factorization> factor() const { return factor(NodeSet::all(dim())); }
    std::size_t cached_factorizations() const;
    void clear_cache() const;
    static constexpr std::size_t kCacheCapacity = 8;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

}  // namespace obstakit
