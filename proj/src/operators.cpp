#include "obstakit/operators.hpp"

#include <algorithm>
#include <list>
#include <mutex>
#include <string>
#include <utility>

#include <Eigen/SparseCholesky>

#include "obstakit/errors.hpp"

namespace obstakit {

// ---------------------------------------------------------------- NodeSet

NodeSet::NodeSet(std::vector<int> indices, int universe) : indices_(std::move(indices)), universe_(universe) {
    if (universe < 0) throw InvalidArgument("NodeSet: negative universe");
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    if (!indices_.empty() && (indices_.front() < 0 || indices_.back() >= universe))
        throw InvalidArgument("NodeSet: index " +
                              std::to_string(indices_.front() < 0 ? indices_.front() : indices_.back()) +
                              " outside [0, " + std::to_string(universe) + ")");
}

NodeSet NodeSet::all(int universe) {
    std::vector<int> idx(universe);
    for (int i = 0; i < universe; ++i) idx[i] = i;
    return NodeSet(std::move(idx), universe);
}

NodeSet NodeSet::from_mask(const std::vector<bool>& mask) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) idx.push_back(static_cast<int>(i));
    return NodeSet(std::move(idx), static_cast<int>(mask.size()));
}

bool NodeSet::contains(int i) const { return std::binary_search(indices_.begin(), indices_.end(), i); }

std::vector<bool> NodeSet::mask() const {
    std::vector<bool> m(universe_, false);
    for (int i : indices_) m[i] = true;
    return m;
}

NodeSet NodeSet::complement() const {
    auto m = mask();
    m.flip();
    return from_mask(m);
}

NodeSet NodeSet::intersect(const NodeSet& other) const {
    if (other.universe_ != universe_) throw InvalidArgument("NodeSet: universe mismatch");
    std::vector<int> out;
    std::set_intersection(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                          std::back_inserter(out));
    return NodeSet(std::move(out), universe_);
}

NodeSet NodeSet::unite(const NodeSet& other) const {
    if (other.universe_ != universe_) throw InvalidArgument("NodeSet: universe mismatch");
    std::vector<int> out;
    std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                   std::back_inserter(out));
    return NodeSet(std::move(out), universe_);
}

bool NodeSet::is_subset_of(const NodeSet& other) const {
    return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(), indices_.end());
}

// ---------------------------------------------------------------- factorizations

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

class CholeskyFactor final : public Factorization {
public:
    CholeskyFactor(const CsrMatrix& a, NodeSet nodes) : nodes_(std::move(nodes)) {
        if (nodes_.empty()) return;
        const int n = static_cast<int>(a.rows());
        std::vector<int> local(n, -1);
        for (int k = 0; k < nodes_.size(); ++k) local[nodes_.indices()[k]] = k;
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(nodes_.size()) * 7);
        for (int gi : nodes_.indices()) {
            for (CsrMatrix::InnerIterator it(a, gi); it; ++it) {
                const int lj = local[it.col()];
                if (lj >= 0) trips.emplace_back(local[gi], lj, it.value());
            }
        }
        ColMatrix sub(nodes_.size(), nodes_.size());
        sub.setFromTriplets(trips.begin(), trips.end());
        llt_.compute(sub);
        if (llt_.info() != Eigen::Success)
            throw NotSpdError("Cholesky factorization failed on a " + std::to_string(nodes_.size()) +
                              "-dof principal submatrix");
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const override {
        if (nodes_.empty()) return Eigen::VectorXd(0);
        return llt_.solve(rhs);
    }
    const NodeSet& nodes() const override { return nodes_; }

private:
    NodeSet nodes_;
    Eigen::SimplicialLLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

}  // namespace

struct SparseSPD::Impl {
    CsrMatrix m;
    mutable std::mutex mutex;
    mutable std::list<std::shared_ptr<const Factorization>> lru;
};

SparseSPD::SparseSPD() : impl_(std::make_shared<Impl>()) {}

SparseSPD::SparseSPD(CsrMatrix matrix) : impl_(std::make_shared<Impl>()) {
    if (matrix.rows() != matrix.cols()) throw InvalidArgument("SparseSPD: matrix is not square");
    matrix.makeCompressed();
    const CsrMatrix t = matrix.transpose();
    const double scale = std::max(1.0, matrix.norm());
    if ((matrix - t).norm() > 1e-12 * scale) throw InvalidArgument("SparseSPD: matrix is not symmetric");
    impl_->m = std::move(matrix);
}

SparseSPD SparseSPD::from_rows(const std::vector<kernels::SparseRow>& rows) {
    const int n = static_cast<int>(rows.size());
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < n; ++i)
        for (std::size_t k = 0; k < rows[i].cols.size(); ++k) trips.emplace_back(i, rows[i].cols[k], rows[i].vals[k]);
    CsrMatrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return SparseSPD(std::move(m));
}

SparseSPD SparseSPD::from_dense(const Eigen::MatrixXd& dense) {
    CsrMatrix m = dense.sparseView();
    return SparseSPD(std::move(m));
}

int SparseSPD::dim() const { return static_cast<int>(impl_->m.rows()); }
const CsrMatrix& SparseSPD::matrix() const { return impl_->m; }

kernels::CsrView SparseSPD::view() const {
    const auto& m = impl_->m;
    const auto nnz = static_cast<std::size_t>(m.nonZeros());
    return {static_cast<int>(m.rows()),
            {m.outerIndexPtr(), static_cast<std::size_t>(m.rows()) + 1},
            {m.innerIndexPtr(), nnz},
            {m.valuePtr(), nnz}};
}

Eigen::MatrixXd SparseSPD::to_dense() const { return Eigen::MatrixXd(impl_->m); }
double SparseSPD::entry(int row, int col) const { return impl_->m.coeff(row, col); }

Eigen::VectorXd SparseSPD::apply(const Eigen::VectorXd& x, kernels::Exec exec) const {
    if (x.size() != dim()) throw InvalidArgument("SparseSPD::apply: dimension mismatch");
    Eigen::VectorXd y(dim());
    const std::span<const double> xs(x.data(), x.size());
    const std::span<double> ys(y.data(), y.size());
    if (exec == kernels::Exec::serial)
        kernels::serial::csr_matvec(view(), xs, ys);
    else
        kernels::omp::csr_matvec(view(), xs, ys);
    return y;
}

Eigen::VectorXd SparseSPD::diagonal() const { return impl_->m.diagonal(); }

std::shared_ptr<const Factorization> SparseSPD::factor(const NodeSet& nodes) const {
    if (nodes.universe() != dim()) throw InvalidArgument("factor: node set universe does not match matrix");
    {
        std::lock_guard lock(impl_->mutex);
        auto& lru = impl_->lru;
        for (auto it = lru.begin(); it != lru.end(); ++it) {
            if ((*it)->nodes() == nodes) {
                auto hit = *it;
                lru.erase(it);
                lru.push_front(hit);
                return hit;
            }
        }
    }
    auto fresh = std::make_shared<const CholeskyFactor>(impl_->m, nodes);
    std::lock_guard lock(impl_->mutex);
    impl_->lru.push_front(fresh);
    while (impl_->lru.size() > kCacheCapacity) impl_->lru.pop_back();
    return fresh;
}

std::size_t SparseSPD::cached_factorizations() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->lru.size();
}

void SparseSPD::clear_cache() const {
    std::lock_guard lock(impl_->mutex);
    impl_->lru.clear();
}

// ---------------------------------------------------------------- solves

namespace {

void check_dim(const SparseSPD& a, Eigen::Index n, const char* who) {
    if (n != a.dim())
        throw InvalidArgument(std::string(who) + ": vector length " + std::to_string(n) +
                              " does not match matrix dimension " + std::to_string(a.dim()));
}

NodalField cg_solve(const SparseSPD& a, const DualVector& b, const SolveOptions& options) {
    if (!(options.tol > 0.0)) throw InvalidArgument("solve_spd: cg tolerance must be positive");
    const Eigen::VectorXd inv_diag = a.diagonal().cwiseInverse();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(a.dim());
    const int cap = options.max_iter > 0 ? options.max_iter : 10 * std::max(1, a.dim());
    const auto view = a.view();
    pcg([&](std::span<const double> in, std::span<double> out) { kernels::omp::csr_matvec(view, in, out); },
        [&](std::span<const double> in, std::span<double> out) {
            for (std::size_t i = 0; i < in.size(); ++i) out[i] = inv_diag[static_cast<Eigen::Index>(i)] * in[i];
        },
        b.values(), x, options.tol, cap);
    return NodalField(std::move(x));
}

}  // namespace

NodalField solve_spd(const SparseSPD& a, const DualVector& b, const SolveOptions& options) {
    check_dim(a, b.size(), "solve_spd");
    SolveMethod method = options.method;
    if (method == SolveMethod::automatic)
        method = a.dim() <= kDirectDofLimit ? SolveMethod::direct : SolveMethod::cg;
    if (method == SolveMethod::cg) return cg_solve(a, b, options);
    return NodalField(a.factor()->solve(b.values()));
}

NodalField poisson_solve(const SparseSPD& a, const DualVector& f) { return solve_spd(a, f); }

NodalField restricted_poisson(const SparseSPD& a, const NodeSet& nodes, const DualVector& f) {
    check_dim(a, f.size(), "restricted_poisson");
    if (nodes.universe() != a.dim())
        throw InvalidArgument("restricted_poisson: node set universe " + std::to_string(nodes.universe()) +
                              " does not match matrix dimension " + std::to_string(a.dim()));
    NodalField out(a.dim());
    if (nodes.empty()) return out;
    const auto& idx = nodes.indices();
    Eigen::VectorXd rhs(nodes.size());
    for (int k = 0; k < nodes.size(); ++k) rhs[k] = f[idx[k]];
    const Eigen::VectorXd sub = a.factor(nodes)->solve(rhs);
    for (int k = 0; k < nodes.size(); ++k) out[idx[k]] = sub[k];
    return out;
}

double dual_norm(const SparseSPD& a, const DualVector& f) {
    const NodalField y = poisson_solve(a, f);
    return std::sqrt(std::max(0.0, f.values().dot(y.values())));
}

double energy_norm(const SparseSPD& a, const NodalField& v) {
    check_dim(a, v.size(), "energy_norm");
    return std::sqrt(std::max(0.0, v.values().dot(a.apply(v.values()))));
}

double l2_norm(const SparseSPD& m, const NodalField& v) {
    check_dim(m, v.size(), "l2_norm");
    return std::sqrt(std::max(0.0, v.values().dot(m.apply(v.values()))));
}

}  // namespace obstakit
