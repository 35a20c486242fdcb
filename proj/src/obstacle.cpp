#include "obstakit/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "obstakit/errors.hpp"

namespace obstakit {

void ObstacleProblem::validate() const {
    const int n = dim();
    if (load.size() != n || lower.size() != n || upper.size() != n)
        throw InvalidArgument("ObstacleProblem: load/bound lengths do not match the stiffness dimension");
    if (!load.values().allFinite()) throw InvalidArgument("ObstacleProblem: non-finite load");
    for (int i = 0; i < n; ++i) {
        if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] == kInf || upper[i] == -kInf)
            throw InvalidArgument("ObstacleProblem: invalid bound at node " + std::to_string(i));
        if (!(lower[i] < upper[i]))
            throw InvalidArgument("ObstacleProblem: infeasible bounds at node " + std::to_string(i) +
                                  " (lower " + std::to_string(lower[i]) + " >= upper " +
                                  std::to_string(upper[i]) + ")");
    }
}

ObstacleProblem ObstacleProblem::without_upper() const {
    return {stiffness, load, lower, Eigen::VectorXd::Constant(dim(), kInf)};
}

ObstacleProblem ObstacleProblem::without_lower() const {
    return {stiffness, load, Eigen::VectorXd::Constant(dim(), -kInf), upper};
}

namespace {

std::uint64_t hash_sets(const std::vector<bool>& lo, const std::vector<bool>& up) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        const std::uint64_t v = (lo[i] ? 1u : 0u) | (up[i] ? 2u : 0u);
        h = (h ^ (v + 0x9e3779b97f4a7c15ull + (i << 6))) * 1099511628211ull;
    }
    return h;
}

struct PdasState {
    Eigen::VectorXd y;
    Eigen::VectorXd lambda;
};

// Solves the reduced system for fixed active sets and returns (y, lambda)
// with lambda zeroed on the inactive set.
PdasState reduced_solve(const ObstacleProblem& p, const std::vector<bool>& lo, const std::vector<bool>& up) {
    const int n = p.dim();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    std::vector<bool> inactive(n);
    bool any_active = false;
    for (int i = 0; i < n; ++i) {
        if (lo[i]) {
            y[i] = p.lower[i];
            any_active = true;
        } else if (up[i]) {
            y[i] = p.upper[i];
            any_active = true;
        }
        inactive[i] = !lo[i] && !up[i];
    }
    const NodeSet free_nodes = NodeSet::from_mask(inactive);
    // A * 0 is exactly zero, skip it so that an all-inactive solve reproduces
    // restricted_poisson(A, O, f) bit for bit.
    DualVector rhs = any_active ? DualVector(p.load.values() - p.stiffness.apply(y)) : p.load;
    const NodalField y_free = restricted_poisson(p.stiffness, free_nodes, rhs);
    for (int i : free_nodes.indices()) y[i] = y_free[i];
    Eigen::VectorXd lambda = p.load.values() - p.stiffness.apply(y);
    for (int i : free_nodes.indices()) lambda[i] = 0.0;
    return {std::move(y), std::move(lambda)};
}

ObstacleSolution finish(const ObstacleProblem& p, PdasState st, std::vector<bool> lo, std::vector<bool> up,
                        int iterations) {
    const int n = p.dim();
    std::vector<bool> inactive(n);
    for (int i = 0; i < n; ++i) inactive[i] = !lo[i] && !up[i];
    ObstacleSolution s;
    s.state = NodalField(std::move(st.y));
    s.multiplier = DualVector(std::move(st.lambda));
    s.active_lower = NodeSet::from_mask(lo);
    s.active_upper = NodeSet::from_mask(up);
    s.inactive = NodeSet::from_mask(inactive);
    s.lower_multiplier = DualVector(s.multiplier.values().cwiseMin(0.0));
    s.upper_multiplier = DualVector(s.multiplier.values().cwiseMax(0.0));
    s.kkt = kkt_report(p, s.state, s.multiplier, s.active_lower, s.active_upper);
    s.kkt_residual = s.kkt.max();
    s.iterations = iterations;
    return s;
}

}  // namespace

KktReport kkt_report(const ObstacleProblem& p, const NodalField& y, const DualVector& multiplier,
                     const NodeSet& active_lower, const NodeSet& active_upper) {
    const int n = p.dim();
    KktReport r;
    const Eigen::VectorXd residual = p.load.values() - p.stiffness.apply(y.values());
    const double fscale = std::max(1.0, p.load.values().cwiseAbs().maxCoeff());
    const auto lo = active_lower.mask();
    const auto up = active_upper.mask();
    for (int i = 0; i < n; ++i) {
        const double yi = y[i];
        const double li = multiplier[i];
        r.feasibility = std::max({r.feasibility, p.lower[i] - yi, yi - p.upper[i]});
        if (lo[i]) r.sign = std::max(r.sign, li);
        if (up[i]) r.sign = std::max(r.sign, -li);
        const double lneg = std::min(0.0, li);
        const double lpos = std::max(0.0, li);
        const double gap_lo = std::isfinite(p.lower[i]) ? yi - p.lower[i] : 1.0;
        const double gap_up = std::isfinite(p.upper[i]) ? yi - p.upper[i] : 1.0;
        r.complementarity = std::max({r.complementarity, std::abs(lneg * gap_lo), std::abs(lpos * gap_up)});
        if (!lo[i] && !up[i])
            r.stationarity = std::max({r.stationarity, std::abs(residual[i]) / fscale, std::abs(li)});
    }
    return r;
}

ObstacleSolution solve_bilateral(const ObstacleProblem& p, const PdasOptions& options) {
    p.validate();
    if (!(options.c > 0.0)) throw InvalidArgument("solve_bilateral: PDAS constant must be positive");
    const int n = p.dim();

    PdasState st;
    std::vector<bool> lo(n, false), up(n, false);
    int iterations = 0;
    if (options.initial_active) {
        lo = options.initial_active->first.mask();
        up = options.initial_active->second.mask();
        if (static_cast<int>(lo.size()) != n || static_cast<int>(up.size()) != n)
            throw InvalidArgument("solve_bilateral: initial active sets have the wrong universe");
        for (int i = 0; i < n; ++i)
            if ((lo[i] && !std::isfinite(p.lower[i])) || (up[i] && !std::isfinite(p.upper[i])) || (lo[i] && up[i]))
                throw InvalidArgument("solve_bilateral: initial active sets inconsistent at node " +
                                      std::to_string(i));
        st = reduced_solve(p, lo, up);
        iterations = 1;
    } else {
        st.y = poisson_solve(p.stiffness, p.load).values().cwiseMax(p.lower).cwiseMin(p.upper);
        st.lambda = p.load.values() - p.stiffness.apply(st.y);
    }

    std::vector<std::uint64_t> seen;
    if (options.initial_active) seen.push_back(hash_sets(lo, up));
    bool have_sets = options.initial_active.has_value();
    // Round-off dead zone: a biactive node whose indicator is +-1 ulp would
    // otherwise flip on every pass and cycle.
    double scale = std::max(1.0, p.load.values().cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
        if (std::isfinite(p.lower[i])) scale = std::max(scale, std::abs(p.lower[i]));
        if (std::isfinite(p.upper[i])) scale = std::max(scale, std::abs(p.upper[i]));
    }
    const double slack = kPdasSlack * scale;
    // Bilateral PDAS may cycle when c is small against the diagonal of A; on
    // the first cycle, restart from the current iterate with c = max diag(A).
    double c = options.c;
    const double c_restart = p.stiffness.matrix().diagonal().maxCoeff();
    std::vector<bool> next_lo(n), next_up(n);
    for (;;) {
        for (int i = 0; i < n; ++i) {
            next_lo[i] = st.lambda[i] + c * (st.y[i] - p.lower[i]) < -slack;
            next_up[i] = st.lambda[i] + c * (st.y[i] - p.upper[i]) > slack;
        }
        if (have_sets && next_lo == lo && next_up == up) break;
        const std::uint64_t h = hash_sets(next_lo, next_up);
        if (std::find(seen.begin(), seen.end(), h) != seen.end()) {
            if (c < c_restart) {
                c = c_restart;
                seen.clear();
                continue;
            }
            const double res = kkt_report(p, NodalField(st.y), DualVector(st.lambda), NodeSet::from_mask(lo),
                                          NodeSet::from_mask(up))
                                   .max();
            throw ConvergenceError("solve_bilateral: PDAS active sets cycle", res, iterations);
        }
        if (iterations >= options.max_iter) {
            const double res = kkt_report(p, NodalField(st.y), DualVector(st.lambda), NodeSet::from_mask(lo),
                                          NodeSet::from_mask(up))
                                   .max();
            throw ConvergenceError("solve_bilateral: PDAS iteration cap reached", res, iterations);
        }
        seen.push_back(h);
        lo = next_lo;
        up = next_up;
        have_sets = true;
        st = reduced_solve(p, lo, up);
        ++iterations;
    }

    ObstacleSolution sol = finish(p, std::move(st), std::move(lo), std::move(up), iterations);
    if (sol.kkt_residual > options.tol)
        throw ConvergenceError("solve_bilateral: active sets settled but KKT residual " +
                                   std::to_string(sol.kkt_residual) + " exceeds tolerance",
                               sol.kkt_residual, iterations);
    return sol;
}

ObstacleSolution solve_unilateral_lower(const ObstacleProblem& p, const PdasOptions& options) {
    return solve_bilateral(p.without_upper(), options);
}

ObstacleSolution solve_unilateral_upper(const ObstacleProblem& p, const PdasOptions& options) {
    return solve_bilateral(p.without_lower(), options);
}

DecompositionReport cross_check_decomposition(const ObstacleSolution& sol, const ObstacleProblem& p,
                                              const PdasOptions& options) {
    const ObstacleSolution lower_only =
        solve_unilateral_lower(p.with_load(p.load - sol.upper_multiplier), options);
    const ObstacleSolution upper_only =
        solve_unilateral_upper(p.with_load(p.load - sol.lower_multiplier), options);
    DecompositionReport r;
    r.lower_deviation = (lower_only.state.values() - sol.state.values()).cwiseAbs().maxCoeff();
    r.upper_deviation = (upper_only.state.values() - sol.state.values()).cwiseAbs().maxCoeff();
    return r;
}

NodeSet strictly_inactive(const ObstacleSolution& sol, const ObstacleProblem& p) {
    std::vector<bool> m(p.dim());
    for (int i = 0; i < p.dim(); ++i) m[i] = p.lower[i] < sol.state[i] && sol.state[i] < p.upper[i];
    return NodeSet::from_mask(m);
}

NodeSet newton_inactive_set(const ObstacleSolution& sol, const ObstacleProblem& p, const std::optional<NodeSet>& custom) {
    const int n = p.dim();
    std::vector<bool> no_multiplier(n);
    for (int i = 0; i < n; ++i) no_multiplier[i] = std::abs(sol.multiplier[i]) <= kActivityTol;
    if (!custom) return NodeSet::from_mask(no_multiplier);

    if (custom->universe() != n) throw InvalidArgument("newton_inactive_set: custom set has the wrong universe");
    const auto inside = custom->mask();
    for (int i = 0; i < n; ++i) {
        const bool strict = p.lower[i] < sol.state[i] && sol.state[i] < p.upper[i];
        if (strict && !inside[i])
            throw InvalidArgument("newton_inactive_set: node " + std::to_string(i) +
                                  " is strictly inactive but missing from the custom set");
        if (inside[i] && !no_multiplier[i])
            throw InvalidArgument("newton_inactive_set: node " + std::to_string(i) +
                                  " carries a multiplier but is in the custom set");
    }
    return *custom;
}

ObstacleSolution solve_increment(const ObstacleProblem& p, const ObstacleSolution& base, const DualVector& delta,
                                 const PdasOptions& options) {
    ObstacleProblem shifted{p.stiffness, base.multiplier + delta, p.lower - base.state.values(),
                            p.upper - base.state.values()};
    PdasOptions warm = options;
    warm.initial_active = std::make_pair(base.active_lower, base.active_upper);
    return solve_bilateral(shifted, warm);
}

std::vector<ProbeRow> semismoothness_probe(const ObstacleProblem& p, const ObstacleSolution& base,
                                           const SparseSPD& mass, const NodalField& direction,
                                           std::span<const double> ts, const PdasOptions& options) {
    const double hnorm = l2_norm(mass, direction);
    const DualVector mh = mass.apply(direction);
    std::vector<ProbeRow> rows;
    for (double t : ts) {
        ProbeRow row;
        row.t = t;
        if (hnorm == 0.0) {
            rows.push_back(row);
            continue;
        }
        const DualVector delta = t * mh;
        const ObstacleSolution inc = solve_increment(p, base, delta, options);
        const ObstacleProblem shifted{p.stiffness, base.multiplier + delta, p.lower - base.state.values(),
                                      p.upper - base.state.values()};
        const NodeSet o = newton_inactive_set(inc, shifted);
        const NodalField linear = restricted_poisson(p.stiffness, o, delta);
        row.remainder = energy_norm(p.stiffness, inc.state - linear) / (t * hnorm);
        for (int i = 0; i < p.dim(); ++i)
            if (base.active_lower.contains(i) != inc.active_lower.contains(i) ||
                base.active_upper.contains(i) != inc.active_upper.contains(i))
                ++row.changed_nodes;
        rows.push_back(row);
    }
    return rows;
}

LewyStampacchiaReport lewy_stampacchia(const ObstacleProblem& p, const ObstacleSolution& sol) {
    const int n = p.dim();
    const Eigen::VectorXd ay = p.stiffness.apply(sol.state.values());
    const Eigen::VectorXd a_lower =
        p.lower.allFinite() ? p.stiffness.apply(p.lower) : Eigen::VectorXd::Constant(n, -kInf);
    const Eigen::VectorXd a_upper =
        p.upper.allFinite() ? p.stiffness.apply(p.upper) : Eigen::VectorXd::Constant(n, kInf);
    LewyStampacchiaReport r;
    for (int i = 0; i < n; ++i) {
        const double lo = std::min(a_upper[i], p.load[i]);
        const double hi = std::max(a_lower[i], p.load[i]);
        const double v = std::max(lo - ay[i], ay[i] - hi);
        if (v > 1e-12 * std::max(1.0, std::abs(ay[i]))) {
            ++r.violations;
            r.max_violation = std::max(r.max_violation, v);
        }
    }
    return r;
}

}  // namespace obstakit
