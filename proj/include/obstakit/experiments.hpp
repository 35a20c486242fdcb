#pragma once

// Seeded instance generators and experiment drivers shared by the command
// line runners and the acceptance suite.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "obstakit/control.hpp"
#include "obstakit/obstacle.hpp"
#include "obstakit/subspaces.hpp"

namespace obstakit::experiments {

using Rng = std::mt19937_64;

// ---- subspace calculus ------------------------------------------------------

struct SubspaceSuiteReport {
    int instances = 0;
    /// Trials built with W1 n W2 != {0}; counted when the inverse was refused.
    int degenerate_trials = 0;
    int degenerate_rejected = 0;
    int series_checked = 0;
    int max_dim = 0;
    double max_c0 = 0.0;
    double symmetry = 0.0;          // |<P x, y> - <x, P y>| for P onto W1 + W2
    double pythagoras = 0.0;        // |s0^2 + c0^2 - 1|
    double product_norm = 0.0;      // | |P1 P2| - c0 |
    double sum_projector = 0.0;     // block-inverse projector vs dense oracle
    double closed_form = 0.0;       // closed-form projector vs dense oracle
    double series = 0.0;            // truncated series vs dense oracle
    double series_monotone = 0.0;   // largest increase of the series error when doubling terms
    double neumann = 0.0;
    double round_trip = 0.0;        // R1 R1^{-1} (a, b) - (a, b)
    double inverse_bound = 0.0;     // max(0, |R1^{-1}| - 4 / (1 - c0))

    double max_deviation() const;
};

/// trials non-degenerate instances with 2 <= dim <= max_dim, random SPD Gram,
/// plus trials / 10 deliberately degenerate ones.
SubspaceSuiteReport subspace_suite(std::uint64_t seed, int trials, int max_dim);

struct BridgeSuiteReport {
    int pairs = 0;
    int dofs = 0;
    double max_deviation = 0.0;
    double max_cosine = 0.0;
};

/// Random node-set pairs with O1 u O2 = all interior nodes on the n x n mesh.
BridgeSuiteReport bridge_suite(int n, int pairs, std::uint64_t seed);

// ---- obstacle instances ------------------------------------------------------

/// tridiag(-1, 2, -1) on `nodes` unknowns.
SparseSPD chain_stiffness(int nodes);

struct ChainInstance {
    ObstacleProblem problem;
    /// Known solution for constructed instances, empty otherwise.
    Eigen::VectorXd planted_state;
    bool has_biactive = false;
};

/// Random 1D obstacle instance with 1..max_nodes unknowns: unilateral or
/// bilateral, either random data or a planted KKT point with some biactive nodes.
ChainInstance random_chain_instance(Rng& rng, int max_nodes);

/// The first obstacle solve of the control iteration from y = 0.
ObstacleProblem ramp_z0_problem(int n, MassVariant variant = MassVariant::consistent);

// ---- mesh-independence sweep -------------------------------------------------

struct Table1Row {
    int n = 0;
    int iterations = 0;
    bool converged = false;
    double seconds = 0.0;
    ControlRun run;
};

struct Table1Result {
    std::vector<Table1Row> rows;
    double seconds = 0.0;
    bool mesh_independent() const;
};

/// Runs the control problem of ramp_control_problem(n) from y0 = 0 for each n,
/// the meshes in parallel. Non-convergence is recorded in the row, not thrown.
Table1Result run_table1(const std::vector<int>& ns, MassVariant variant = MassVariant::consistent,
                        const ControlOptions& options = {}, bool keep_runs = true);

}  // namespace obstakit::experiments
