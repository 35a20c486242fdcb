#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "obstakit/errors.hpp"
#include "obstakit/fields.hpp"
#include "obstakit/mesh.hpp"
#include "obstakit/obstacle.hpp"
#include "obstakit/sparse.hpp"

namespace obstakit {

/// min 1/2 |y - y_D|^2_{L^2} + nu/2 |u|^2_{H_0^1}  s.t.  -Delta y = u,  lower <= u <= upper.
///
/// Discrete convention, used everywhere below: (-Delta)^{-1} applied to an
/// L^2 function v is A^{-1} (M v), and the obstacle solver receives its
/// H^{-1} argument z as the load vector M z.
struct ControlProblem {
    StructuredTriMesh mesh;
    SparseSPD stiffness;
    SparseSPD mass;
    MassVariant mass_variant = MassVariant::consistent;
    double nu = 1.0;
    NodalField target;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    int dim() const { return stiffness.dim(); }
    void validate() const;
};

using ScalarField = std::function<double(double, double)>;

ControlProblem make_control_problem(int n, double nu, const ScalarField& target, const ScalarField& lower,
                                    const ScalarField& upper, MassVariant variant = MassVariant::consistent);

/// nu = 1e-5, y_D = 10 (1 - x1 - x2), controls in [-5, 5].
ControlProblem ramp_control_problem(int n, MassVariant variant = MassVariant::consistent);

struct ControlOptions {
    double tol = 1e-12;
    int max_iter = 50;
    /// Relative tolerance of the inner CG on the Newton system.
    double inner_tol = 1e-13;
    int inner_max_iter = 5000;
    PdasOptions pdas;
};

/// Obstacle problem for u = S(z): stiffness A, load M z, the control bounds.
ObstacleProblem control_obstacle_problem(const ControlProblem& problem, const NodalField& z);

struct ResidualEvaluation {
    NodalField z;
    NodalField control;
    NodalField state_tilde;
    /// Q(y) = y - state_tilde
    NodalField q;
    double residual = 0.0;
    ObstacleSolution obstacle;
};

/// z = nu^{-1} A^{-1} M (y_D - y), u = S(M z), y~ = A^{-1} M u, residual |y - y~|_M.
ResidualEvaluation residual_map(const ControlProblem& problem, const NodalField& y, const PdasOptions& pdas = {});

/// out = M G h with G h = h + nu^{-1} A^{-1} M S(O) M A^{-1} M h. SPD and >= M.
Eigen::VectorXd newton_matrix_apply(const ControlProblem& problem, const NodeSet& o, const Eigen::VectorXd& h);

struct NewtonStep {
    NodalField next;
    int cg_iterations = 0;
    double cg_residual = 0.0;
};

/// Solves G (y_next - y) = -(y - y~) in the symmetric form M G, preconditioned by M^{-1}.
NewtonStep newton_step(const ControlProblem& problem, const NodalField& y, const ResidualEvaluation& eval,
                       const NodeSet& o, const ControlOptions& options = {});

struct ControlIterate {
    NodalField y;
    NodalField z;
    NodalField u;
    NodalField y_tilde;
    double residual = 0.0;
    /// Newton set used for the step out of this iterate (empty for the last one).
    NodeSet inactive;
    ObstacleSolution obstacle;
    int cg_iterations = 0;
};

struct ControlRun {
    std::vector<ControlIterate> iterates;
    bool converged = false;
    /// Newton updates performed: the index i at which the residual test passed.
    int iterations = 0;
    NodalField state;
    NodalField control;
    /// r_{i+1} / r_i
    std::vector<double> ratios;
    /// Residual of an independent re-evaluation at the converged state.
    double verified_residual = 0.0;
};

/// Thrown by solve() on the iteration cap; carries the history.
class ControlNonConvergence : public ConvergenceError {
public:
    ControlNonConvergence(const std::string& what, ControlRun run)
        : ConvergenceError(what, run.iterates.empty() ? 0.0 : run.iterates.back().residual,
                           static_cast<int>(run.iterates.size())),
          run_(std::move(run)) {}
    const ControlRun& run() const noexcept { return run_; }

private:
    ControlRun run_;
};

ControlRun solve_control(const ControlProblem& problem, const NodalField& y0, const ControlOptions& options = {});

/// Reduced objective at control u (state A^{-1} M u).
double objective(const ControlProblem& problem, const NodalField& u);

}  // namespace obstakit
