#include "obstakit/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "obstakit/errors.hpp"
#include "obstakit/operators.hpp"
#include "obstakit/oracles.hpp"

namespace obstakit::experiments {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd randn(Rng& rng, int rows, int cols) {
    std::normal_distribution<double> dist;
    MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = dist(rng);
    return m;
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

SpacePtr random_space(Rng& rng, int n) {
    if (uniform(rng, 0.0, 1.0) < 0.1) return InnerProductSpace::euclidean(n);
    const MatrixXd b = randn(rng, n, n);
    MatrixXd g = b * b.transpose() / n + 0.1 * MatrixXd::Identity(n, n);
    g = 0.5 * (g + g.transpose());
    return InnerProductSpace::from_gram(std::move(g));
}

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

double SubspaceSuiteReport::max_deviation() const {
    return std::max({symmetry, pythagoras, product_norm, sum_projector, closed_form, series, series_monotone, neumann,
                     round_trip, inverse_bound});
}

SubspaceSuiteReport subspace_suite(std::uint64_t seed, int trials, int max_dim) {
    if (max_dim < 2) throw InvalidArgument("subspace_suite: max_dim must be at least 2");
    Rng rng(seed);
    SubspaceSuiteReport rep;
    for (int t = 0; t < trials; ++t) {
        const int n = uniform_int(rng, 2, max_dim);
        const int k1 = uniform_int(rng, 1, n - 1);
        const int k2 = uniform_int(rng, 1, n - k1);
        const SpacePtr space = random_space(rng, n);
        const MatrixXd gens1 = randn(rng, n, k1);
        const MatrixXd gens2 = randn(rng, n, k2);
        const Subspace w1 = orthonormal_basis(space, gens1);
        const Subspace w2 = orthonormal_basis(space, gens2);
        const MatrixXd g = space->apply_gram(MatrixXd::Identity(n, n));

        const double c0 = min_angle_cosine(w1, w2);
        const SineReport s0 = min_angle_sine(w1, w2);
        const MatrixXd p1 = projector(w1);
        const MatrixXd p2 = projector(w2);
        const MatrixXd oracle = oracles::dense_sum_projector(g, gens1, gens2);
        const MatrixXd p = project_onto_sum(w1, w2);

        rep.max_dim = std::max(rep.max_dim, n);
        rep.max_c0 = std::max(rep.max_c0, c0);
        rep.symmetry = std::max(rep.symmetry, max_abs(g * p - (g * p).transpose()));
        rep.pythagoras = std::max(rep.pythagoras, std::abs(s0.direct * s0.direct + c0 * c0 - 1.0));
        rep.product_norm = std::max(rep.product_norm, std::abs(space->operator_norm(p1 * p2) - c0));
        rep.sum_projector = std::max(rep.sum_projector, max_abs(p - oracle));
        rep.closed_form = std::max(rep.closed_form, max_abs(project_onto_sum_closed_form(w1, w2) - oracle));
        rep.neumann = std::max(rep.neumann, neumann_identity_deviation(w1, w2));

        const MatrixXd a = randn(rng, n, 3);
        const MatrixXd b = randn(rng, n, 3);
        const auto [x, y] = r1_apply_inverse(w1, w2, a, b);
        const auto [ra, rb] = r1_apply(w1, w2, x, y);
        rep.round_trip = std::max(rep.round_trip, std::max(max_abs(ra - a), max_abs(rb - b)));
        const double inv_norm = space->operator_norm(r1_inverse_matrix(w1, w2));
        rep.inverse_bound = std::max(rep.inverse_bound, inv_norm - 4.0 / (1.0 - c0));

        if (c0 <= 0.98) {
            const int terms = c0 < 1e-8 ? 2
                                        : static_cast<int>(std::ceil(std::log(1e-13) / (2.0 * std::log(c0)))) + 2;
            const double e_half = max_abs(project_onto_sum_series(w1, w2, std::max(1, terms / 2)) - oracle);
            const double e_full = max_abs(project_onto_sum_series(w1, w2, terms) - oracle);
            rep.series = std::max(rep.series, e_full);
            rep.series_monotone = std::max(rep.series_monotone, e_full - e_half);
            ++rep.series_checked;
        }
        ++rep.instances;
    }

    for (int t = 0; t < trials / 10; ++t) {
        const int n = uniform_int(rng, 3, std::max(3, max_dim));
        const SpacePtr space = random_space(rng, n);
        MatrixXd gens1 = randn(rng, n, 2);
        MatrixXd gens2 = randn(rng, n, 2);
        gens2.col(0) = gens1.col(0) + 2.0 * gens1.col(1);
        const Subspace w1 = orthonormal_basis(space, gens1);
        const Subspace w2 = orthonormal_basis(space, gens2);
        ++rep.degenerate_trials;
        try {
            (void)r1_apply_inverse(w1, w2, MatrixXd::Zero(n, 1), MatrixXd::Zero(n, 1));
        } catch (const AngleDegenerateError&) {
            ++rep.degenerate_rejected;
        }
    }
    return rep;
}

BridgeSuiteReport bridge_suite(int n, int pairs, std::uint64_t seed) {
    Rng rng(seed);
    const StructuredTriMesh mesh = friedrichs_keller(n);
    const SparseSPD a = assemble_stiffness(mesh);
    BridgeSuiteReport rep;
    rep.dofs = a.dim();
    for (int p = 0; p < pairs; ++p) {
        std::vector<bool> m1(a.dim()), m2(a.dim());
        for (int i = 0; i < a.dim(); ++i) {
            const double r = uniform(rng, 0.0, 1.0);
            m1[i] = r < 0.35 || r >= 0.7;
            m2[i] = r >= 0.35;
        }
        const BridgeReport r = fem_angle_bridge(a, NodeSet::from_mask(m1), NodeSet::from_mask(m2));
        rep.max_deviation = std::max(rep.max_deviation, r.deviation);
        rep.max_cosine = std::max(rep.max_cosine, r.cosine);
        ++rep.pairs;
    }
    return rep;
}

SparseSPD chain_stiffness(int nodes) {
    if (nodes < 1) throw InvalidArgument("chain_stiffness: need at least one node");
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < nodes; ++i) {
        trip.emplace_back(i, i, 2.0);
        if (i + 1 < nodes) {
            trip.emplace_back(i, i + 1, -1.0);
            trip.emplace_back(i + 1, i, -1.0);
        }
    }
    CsrMatrix m(nodes, nodes);
    m.setFromTriplets(trip.begin(), trip.end());
    return SparseSPD(std::move(m));
}

ChainInstance random_chain_instance(Rng& rng, int max_nodes) {
    const int m = uniform_int(rng, 1, max_nodes);
    const int kind = uniform_int(rng, 0, 2);  // 0 lower, 1 upper, 2 both
    const bool use_lower = kind != 1;
    const bool use_upper = kind != 0;
    const SparseSPD a = chain_stiffness(m);

    VectorXd lower = VectorXd::Constant(m, -kInf);
    VectorXd upper = VectorXd::Constant(m, kInf);
    for (int i = 0; i < m; ++i) {
        const double lo = uniform(rng, -1.0, 0.0);
        if (use_lower) lower[i] = lo;
        if (use_upper) upper[i] = lo + uniform(rng, 0.2, 2.0);
    }

    ChainInstance inst;
    if (uniform(rng, 0.0, 1.0) < 0.5) {
        VectorXd f(m);
        for (int i = 0; i < m; ++i) f[i] = uniform(rng, -3.0, 3.0);
        inst.problem = ObstacleProblem{a, DualVector(f), lower, upper};
        return inst;
    }

    // Planted KKT point: y on the bounds where active, multiplier of the
    // right sign there, and a share of active nodes with zero multiplier.
    VectorXd y(m), lambda = VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
        const int role = uniform_int(rng, 0, 2);
        const bool biactive = uniform(rng, 0.0, 1.0) < 0.3;
        if (role == 0 && use_lower) {
            y[i] = lower[i];
            lambda[i] = biactive ? 0.0 : -uniform(rng, 0.1, 2.0);
        } else if (role == 1 && use_upper) {
            y[i] = upper[i];
            lambda[i] = biactive ? 0.0 : uniform(rng, 0.1, 2.0);
        } else {
            const double lo = use_lower ? lower[i] : (use_upper ? upper[i] - 2.0 : -1.0);
            const double hi = use_upper ? upper[i] : lo + 2.0;
            y[i] = lo + uniform(rng, 0.1, 0.9) * (hi - lo);
            continue;
        }
        if (lambda[i] == 0.0) inst.has_biactive = true;
    }
    const VectorXd f = a.apply(y) + lambda;
    inst.problem = ObstacleProblem{a, DualVector(f), lower, upper};
    inst.planted_state = y;
    return inst;
}

ObstacleProblem ramp_z0_problem(int n, MassVariant variant) {
    const ControlProblem p = ramp_control_problem(n, variant);
    const NodalField z(poisson_solve(p.stiffness, p.mass.apply(p.target)).values() / p.nu);
    return control_obstacle_problem(p, z);
}

bool Table1Result::mesh_independent() const {
    if (rows.empty()) return true;
    return std::all_of(rows.begin(), rows.end(),
                       [&](const Table1Row& r) { return r.converged && r.iterations == rows.front().iterations; });
}

Table1Result run_table1(const std::vector<int>& ns, MassVariant variant, const ControlOptions& options,
                        bool keep_runs) {
    Table1Result result;
    result.rows.resize(ns.size());
    std::vector<int> order(ns.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ns[a] > ns[b]; });

    const auto start = std::chrono::steady_clock::now();
    const int count = static_cast<int>(order.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int k = 0; k < count; ++k) {
        const int idx = order[k];
        Table1Row& row = result.rows[idx];
        row.n = ns[idx];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const ControlProblem p = ramp_control_problem(row.n, variant);
            row.run = solve_control(p, NodalField::zero(p.dim()), options);
            row.converged = row.run.converged;
        } catch (const ControlNonConvergence& e) {
            row.run = e.run();
            row.converged = false;
        } catch (const std::exception&) {
            row.converged = false;
        }
        row.iterations = row.run.iterations;
        if (!keep_runs) row.run = ControlRun{};
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace obstakit::experiments
