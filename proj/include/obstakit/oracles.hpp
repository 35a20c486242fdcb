#pragma once

// Slow, dense, obviously-correct reference computations. Nothing here calls
// the PDAS solver, the restricted Poisson solves or the subspace machinery it
// is used to check.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "obstakit/control.hpp"

namespace obstakit::oracles {

using DenseMatrix = Eigen::MatrixXd;

inline constexpr int kEnumerationLimit = 15;

enum class Activity : std::uint8_t { inactive, lower, upper };

struct EnumerationResult {
    Eigen::VectorXd state;
    Eigen::VectorXd multiplier;
    /// Every assignment passing feasibility and multiplier signs. More than
    /// one only at biactive nodes; all share the same state.
    std::vector<std::vector<Activity>> admissible;
    /// Largest state difference between admissible assignments.
    double state_spread = 0.0;
};

/// Tries all 3^n activity assignments. Tolerances scale with max(1, |f|_inf).
/// Throws SizeError above kEnumerationLimit nodes.
EnumerationResult enumerate_obstacle(const DenseMatrix& a, const Eigen::VectorXd& f, const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper, double tol = 1e-10);

/// Projector onto span(gens1, gens2) in the Gram inner product, from an SVD
/// of the Cholesky-transformed generators.
DenseMatrix dense_sum_projector(const DenseMatrix& gram, const DenseMatrix& gens1, const DenseMatrix& gens2,
                                double rank_tol = 1e-10);

using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// (map(u + t h) - map(u)) / t
Eigen::VectorXd fd_directional_derivative(const VectorMap& map, const Eigen::VectorXd& u, const Eigen::VectorXd& h,
                                          double t);

struct ProjectedGradientResult {
    Eigen::VectorXd control;
    int steps = 0;
    bool converged = false;
    /// |u - Pi(u - grad J / L)|_inf at exit
    double fixed_point_residual = 0.0;
};

/// Accelerated projected gradient on the dense reduced objective
/// 1/2 u^T H u - g^T u, H = (A^{-1}M)^T M (A^{-1}M) + nu A, with Euclidean
/// gradients and the nodal box projection (a valid pairing since both live
/// in the same Euclidean metric). Step rate / L.
ProjectedGradientResult projected_gradient_control(const ControlProblem& problem, int max_steps = 200000,
                                                   double rate = 1.0, double tol = 1e-13);

/// Unconstrained minimizer of the reduced objective: H u = g.
Eigen::VectorXd dense_unconstrained_control(const ControlProblem& problem);

struct Fixture {
    std::uint64_t seed = 0;
    std::string generator;
    std::vector<double> values;
};

inline constexpr const char* kFixtureGenerator = "obstakit-oracles/1";

void write_fixture(const std::string& path, const Fixture& fixture);
Fixture read_fixture(const std::string& path);

}  // namespace obstakit::oracles
