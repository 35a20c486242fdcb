#include "obstakit/control.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "obstakit/errors.hpp"
#include "obstakit/operators.hpp"

namespace obstakit {

void ControlProblem::validate() const {
    const int n = dim();
    if (!(nu > 0.0) || !std::isfinite(nu)) throw InvalidArgument("ControlProblem: nu must be positive and finite");
    if (mass.dim() != n || target.size() != n || lower.size() != n || upper.size() != n)
        throw InvalidArgument("ControlProblem: dimension mismatch");
    if (!target.values().allFinite()) throw InvalidArgument("ControlProblem: non-finite target");
    for (int i = 0; i < n; ++i)
        if (!(lower[i] < upper[i]))
            throw InvalidArgument("ControlProblem: infeasible bounds at node " + std::to_string(i));
}

ControlProblem make_control_problem(int n, double nu, const ScalarField& target, const ScalarField& lower,
                                    const ScalarField& upper, MassVariant variant) {
    ControlProblem p;
    p.mesh = friedrichs_keller(n);
    p.stiffness = assemble_stiffness(p.mesh);
    p.mass = assemble_mass(p.mesh, variant);
    p.mass_variant = variant;
    p.nu = nu;
    p.target = interpolate(p.mesh, target);
    p.lower.resize(p.mesh.num_dofs());
    p.upper.resize(p.mesh.num_dofs());
    for (int k = 0; k < p.mesh.num_dofs(); ++k) {
        const auto& x = p.mesh.dof_coords(k);
        p.lower[k] = lower(x[0], x[1]);
        p.upper[k] = upper(x[0], x[1]);
    }
    p.validate();
    return p;
}

ControlProblem ramp_control_problem(int n, MassVariant variant) {
    return make_control_problem(
        n, 1e-5, [](double x1, double x2) { return 10.0 * (-x1 - x2 + 1.0); },
        [](double, double) { return -5.0; }, [](double, double) { return 5.0; }, variant);
}

ObstacleProblem control_obstacle_problem(const ControlProblem& p, const NodalField& z) {
    return {p.stiffness, p.mass.apply(z), p.lower, p.upper};
}

ResidualEvaluation residual_map(const ControlProblem& p, const NodalField& y, const PdasOptions& pdas) {
    if (y.size() != p.dim()) throw InvalidArgument("residual_map: state has the wrong length");
    ResidualEvaluation e;
    e.z = (1.0 / p.nu) * poisson_solve(p.stiffness, p.mass.apply(p.target - y));
    e.obstacle = solve_bilateral(control_obstacle_problem(p, e.z), pdas);
    e.control = e.obstacle.state;
    e.state_tilde = poisson_solve(p.stiffness, p.mass.apply(e.control));
    e.q = y - e.state_tilde;
    e.residual = l2_norm(p.mass, e.q);
    return e;
}

Eigen::VectorXd newton_matrix_apply(const ControlProblem& p, const NodeSet& o, const Eigen::VectorXd& h) {
    const Eigen::VectorXd mh = p.mass.apply(h);
    const auto full = p.stiffness.factor();
    const Eigen::VectorXd w = full->solve(mh);
    const NodalField s = restricted_poisson(p.stiffness, o, DualVector(p.mass.apply(w)));
    const Eigen::VectorXd t = full->solve(p.mass.apply(s.values()));
    return mh + (1.0 / p.nu) * p.mass.apply(t);
}

NewtonStep newton_step(const ControlProblem& p, const NodalField& y, const ResidualEvaluation& eval, const NodeSet& o,
                       const ControlOptions& options) {
    if (o.universe() != p.dim()) throw InvalidArgument("newton_step: node set does not match the problem");
    const Eigen::VectorXd b = p.mass.apply((eval.state_tilde - y).values());
    Eigen::VectorXd step = Eigen::VectorXd::Zero(p.dim());
    const auto mass_factor = p.mass.factor();
    const CgReport report = pcg(
        [&](std::span<const double> in, std::span<double> out) {
            const Eigen::Map<const Eigen::VectorXd> h(in.data(), static_cast<Eigen::Index>(in.size()));
            Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) =
                newton_matrix_apply(p, o, h);
        },
        [&](std::span<const double> in, std::span<double> out) {
            const Eigen::Map<const Eigen::VectorXd> r(in.data(), static_cast<Eigen::Index>(in.size()));
            Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = mass_factor->solve(r);
        },
        b, step, options.inner_tol, options.inner_max_iter, std::numeric_limits<double>::min());
    NewtonStep s;
    s.next = y + NodalField(std::move(step));
    s.cg_iterations = report.iterations;
    s.cg_residual = report.residual;
    return s;
}

ControlRun solve_control(const ControlProblem& p, const NodalField& y0, const ControlOptions& options) {
    p.validate();
    if (!(options.tol >= 0.0)) throw InvalidArgument("solve_control: tol must be non-negative");
    ControlRun run;
    NodalField y = y0;
    for (int i = 0;; ++i) {
        ResidualEvaluation eval = residual_map(p, y, options.pdas);
        ControlIterate it{y, eval.z, eval.control, eval.state_tilde, eval.residual, NodeSet::none(p.dim()),
                          eval.obstacle, 0};
        if (!run.iterates.empty()) run.ratios.push_back(eval.residual / run.iterates.back().residual);
        if (eval.residual <= options.tol) {
            run.iterates.push_back(std::move(it));
            run.converged = true;
            run.iterations = i;
            break;
        }
        if (i >= options.max_iter) {
            run.iterates.push_back(std::move(it));
            run.iterations = i;
            throw ControlNonConvergence("solve_control: no convergence within " + std::to_string(options.max_iter) +
                                            " Newton iterations",
                                        std::move(run));
        }
        it.inactive = newton_inactive_set(eval.obstacle, control_obstacle_problem(p, eval.z));
        NewtonStep step = newton_step(p, y, eval, it.inactive, options);
        it.cg_iterations = step.cg_iterations;
        run.iterates.push_back(std::move(it));
        y = std::move(step.next);
    }
    run.state = run.iterates.back().y;
    run.control = run.iterates.back().u;
    run.verified_residual = residual_map(p, run.state, options.pdas).residual;
    return run;
}

double objective(const ControlProblem& p, const NodalField& u) {
    const NodalField y = poisson_solve(p.stiffness, p.mass.apply(u));
    const NodalField d = y - p.target;
    const double misfit = l2_norm(p.mass, d);
    const double reg = energy_norm(p.stiffness, u);
    return 0.5 * misfit * misfit + 0.5 * p.nu * reg * reg;
}

}  // namespace obstakit
