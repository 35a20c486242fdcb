#pragma once

#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "obstakit/fields.hpp"
#include "obstakit/operators.hpp"
#include "obstakit/sparse.hpp"

namespace obstakit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Tolerances for feasibility and complementarity on unit-scaled problems.
inline constexpr double kFeasibilityTol = 1e-10;
/// |lambda_i| at or below this counts as "no multiplier" when building O.
inline constexpr double kActivityTol = 1e-12;
/// Relative dead zone of the PDAS activity test, scaled by the data magnitude.
inline constexpr double kPdasSlack = 1e-13;

/// Discrete obstacle problem: find lower <= y <= upper with
/// (A y - f)^T (v - y) >= 0 for all admissible v. Absent bounds are +-infinity.
struct ObstacleProblem {
    SparseSPD stiffness;
    DualVector load;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    int dim() const { return stiffness.dim(); }
    /// Throws InvalidArgument on size mismatch, NaN, or lower >= upper at a node.
    void validate() const;

    ObstacleProblem with_load(DualVector f) const { return {stiffness, std::move(f), lower, upper}; }
    ObstacleProblem without_upper() const;
    ObstacleProblem without_lower() const;
};

/// Four blocks of the discrete complementarity system, each a max-abs violation.
struct KktReport {
    double feasibility = 0.0;
    double sign = 0.0;
    double complementarity = 0.0;
    /// Relative to max(1, |f|_inf).
    double stationarity = 0.0;

    double max() const { return std::max(std::max(feasibility, sign), std::max(complementarity, stationarity)); }
};

struct ObstacleSolution {
    NodalField state;
    /// f - A y on the active sets, exactly zero on the inactive set.
    DualVector multiplier;
    NodeSet active_lower;
    NodeSet active_upper;
    NodeSet inactive;
    /// min(0, multiplier)
    DualVector lower_multiplier;
    /// max(0, multiplier)
    DualVector upper_multiplier;
    KktReport kkt;
    double kkt_residual = 0.0;
    int iterations = 0;
};

struct PdasOptions {
    double c = 1.0;
    int max_iter = 500;
    double tol = kFeasibilityTol;
    /// Optional starting active sets (lower, upper); otherwise the clamped
    /// unconstrained solution seeds the iteration.
    std::optional<std::pair<NodeSet, NodeSet>> initial_active;
};

/// Primal-dual active set method. A detected cycle triggers one restart with
/// c = max diag(A) when options.c is smaller. Throws ConvergenceError on the
/// iteration cap or on a cycle after that, InvalidArgument on infeasible bounds.
ObstacleSolution solve_bilateral(const ObstacleProblem& problem, const PdasOptions& options = {});
ObstacleSolution solve_unilateral_lower(const ObstacleProblem& problem, const PdasOptions& options = {});
ObstacleSolution solve_unilateral_upper(const ObstacleProblem& problem, const PdasOptions& options = {});

/// Complementarity residual of a candidate (state, multiplier, inactive set).
KktReport kkt_report(const ObstacleProblem& problem, const NodalField& y, const DualVector& multiplier,
                     const NodeSet& active_lower, const NodeSet& active_upper);

struct DecompositionReport {
    /// |S_lower(f - upper_multiplier) - y|_inf
    double lower_deviation = 0.0;
    /// |S_upper(f - lower_multiplier) - y|_inf
    double upper_deviation = 0.0;
    double max() const { return std::max(lower_deviation, upper_deviation); }
};

/// Re-solves both unilateral problems with the other multiplier moved into the load.
DecompositionReport cross_check_decomposition(const ObstacleSolution& solution, const ObstacleProblem& problem,
                                              const PdasOptions& options = {});

/// Node set O for the Newton derivative S(O). By default the largest admissible
/// choice, {i : |lambda_i| <= kActivityTol}. A custom set must contain every
/// strictly inactive node and avoid the multiplier support; violations throw
/// InvalidArgument naming the node.
NodeSet newton_inactive_set(const ObstacleSolution& solution, const ObstacleProblem& problem,
                            const std::optional<NodeSet>& custom = std::nullopt);

/// Strictly inactive nodes {lower < y < upper}.
NodeSet strictly_inactive(const ObstacleSolution& solution, const ObstacleProblem& problem);

/// S(f + delta) - S(f), solved as an obstacle problem for the increment with
/// bounds shifted by the base state and warm-started from the base active sets.
/// The returned multiplier and sets are those of the perturbed problem.
ObstacleSolution solve_increment(const ObstacleProblem& problem, const ObstacleSolution& base,
                                 const DualVector& delta, const PdasOptions& options = {});

struct ProbeRow {
    double t = 0.0;
    double remainder = 0.0;
    /// Nodes whose activity differs between f and f + t M h.
    int changed_nodes = 0;
};

/// Newton remainder of the solution map along direction h (an L^2 function):
/// r(t) = |S(f + tMh) - S(f) - S(O_t)(t M h)|_A / (t |h|_M), with O_t the
/// Newton inactive set at the perturbed point.
std::vector<ProbeRow> semismoothness_probe(const ObstacleProblem& problem, const ObstacleSolution& base,
                                           const SparseSPD& mass, const NodalField& direction,
                                           std::span<const double> ts, const PdasOptions& options = {});

struct LewyStampacchiaReport {
    int violations = 0;
    double max_violation = 0.0;
};

/// Diagnostic only: checks min(A upper, f) <= A y <= max(A lower, f) nodewise,
/// with the obstacle images built from interior values.
LewyStampacchiaReport lewy_stampacchia(const ObstacleProblem& problem, const ObstacleSolution& solution);

}  // namespace obstakit
