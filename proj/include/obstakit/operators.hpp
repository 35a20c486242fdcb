#pragma once

#include <cmath>
#include <span>

#include <Eigen/Core>

#include "obstakit/errors.hpp"
#include "obstakit/fields.hpp"
#include "obstakit/kernels.hpp"
#include "obstakit/sparse.hpp"

namespace obstakit {

enum class SolveMethod { automatic, direct, cg };

/// Above this many dofs `automatic` switches from sparse Cholesky to Jacobi-PCG.
inline constexpr int kDirectDofLimit = 300000;

struct SolveOptions {
    SolveMethod method = SolveMethod::automatic;
    /// CG stops at ||Ax - b|| <= tol * max(1, ||b||).
    double tol = 1e-12;
    /// 0 selects 10 * dim.
    int max_iter = 0;
};

NodalField solve_spd(const SparseSPD& a, const DualVector& b, const SolveOptions& options = {});

/// y = (-Delta)^{-1} f, with `a` the stiffness matrix.
NodalField poisson_solve(const SparseSPD& a, const DualVector& f);

/// Poisson problem restricted to the node set: delta vanishes off `nodes` and
/// satisfies (A delta)_i = f_i for i in `nodes`.
NodalField restricted_poisson(const SparseSPD& a, const NodeSet& nodes, const DualVector& f);

/// sqrt(f^T A^{-1} f)
double dual_norm(const SparseSPD& a, const DualVector& f);
/// sqrt(v^T A v)
double energy_norm(const SparseSPD& a, const NodalField& v);
/// sqrt(v^T M v)
double l2_norm(const SparseSPD& m, const NodalField& v);

struct CgReport {
    int iterations = 0;
    double residual = 0.0;
};

/// Preconditioned conjugate gradients, x used as the initial guess.
/// `apply(in, out)` computes out = K in for an SPD operator K, `precondition`
/// likewise applies an SPD approximation of K^{-1}. Stops when
/// ||b - K x|| <= tol * max(floor, ||b||); throws ConvergenceError otherwise.
template <class Apply, class Precondition>
CgReport pcg(Apply&& apply, Precondition&& precondition, const Eigen::VectorXd& b,
             Eigen::VectorXd& x, double tol, int max_iter, double floor = 1.0) {
    namespace k = kernels::omp;
    const auto n = b.size();
    auto sp = [](const Eigen::VectorXd& v) { return std::span<const double>(v.data(), v.size()); };
    auto mp = [](Eigen::VectorXd& v) { return std::span<double>(v.data(), v.size()); };

    Eigen::VectorXd r(n), z(n), p(n), q(n);
    apply(sp(x), mp(q));
    r = b - q;
    const double target = tol * std::max(floor, std::sqrt(k::dot(sp(b), sp(b))));
    double rnorm = std::sqrt(k::dot(sp(r), sp(r)));
    if (rnorm <= target) return {0, rnorm};

    precondition(sp(r), mp(z));
    p = z;
    double rz = k::dot(sp(r), sp(z));
    for (int it = 1; it <= max_iter; ++it) {
        apply(sp(p), mp(q));
        const double pq = k::dot(sp(p), sp(q));
        if (!(pq > 0.0)) throw ConvergenceError("pcg: operator not positive definite", rnorm, it);
        const double alpha = rz / pq;
        k::axpy(alpha, sp(p), mp(x));
        k::axpy(-alpha, sp(q), mp(r));
        rnorm = std::sqrt(k::dot(sp(r), sp(r)));
        if (rnorm <= target) return {it, rnorm};
        precondition(sp(r), mp(z));
        const double rz_new = k::dot(sp(r), sp(z));
        k::xpby(sp(z), rz_new / rz, mp(p));
        rz = rz_new;
    }
    throw ConvergenceError("pcg: iteration cap reached", rnorm, max_iter);
}

}  // namespace obstakit
