#include "obstakit/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "obstakit/control.hpp"
#include "obstakit/errors.hpp"
#include "obstakit/experiments.hpp"
#include "obstakit/io.hpp"
#include "obstakit/mesh.hpp"
#include "obstakit/obstacle.hpp"
#include "obstakit/operators.hpp"

namespace obstakit::cli {

namespace {

namespace fs = std::filesystem;
using io::format_real;

constexpr double kPi = 3.14159265358979323846;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Bound given as a number or "none"; "auto" lets the command pick.
const CLI::Validator kBound(
    [](std::string& s) -> std::string {
        if (s == "none" || s == "auto") return {};
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size() || !std::isfinite(v)) return "bound must be a finite number, 'none' or 'auto'";
        } catch (const std::exception&) {
            return "bound must be a finite number, 'none' or 'auto'";
        }
        return {};
    },
    "BOUND");

const CLI::Validator kFinite(
    [](std::string& s) -> std::string {
        try {
            if (!std::isfinite(std::stod(s))) return "value must be finite";
        } catch (const std::exception&) {
            return "value must be a number";
        }
        return {};
    },
    "FINITE");

double bound_value(const std::string& s, double none_value) {
    return s == "none" ? none_value : std::stod(s);
}

MassVariant mass_variant(const std::string& s) { return s == "lumped" ? MassVariant::lumped : MassVariant::consistent; }

void base_options(CLI::App& app) {
    app.set_config("--config", "", "key=value configuration file");
    app.allow_config_extras(CLI::config_extras_mode::error);
}

/// Returns -1 when parsing succeeded, otherwise the exit code.
int parse(CLI::App& app, std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    return -1;
}

fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir);
    if (!p.empty()) fs::create_directories(p);
    return p;
}

std::vector<double> all_nodes(const StructuredTriMesh& mesh, const Eigen::VectorXd& v) { return to_all_nodes(mesh, v); }

Eigen::VectorXd activity_flags(const ObstacleSolution& s) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(s.state.size());
    for (int i : s.active_lower.indices()) a[i] = -1.0;
    for (int i : s.active_upper.indices()) a[i] = 1.0;
    return a;
}

// ---------------------------------------------------------------- mesh-info

int cmd_mesh_info(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Mesh and matrix summary", "obstakit mesh-info");
    base_options(app);
    int n = 8;
    app.add_option("--n", n, "subdivisions per side")->check(CLI::Range(2, 1 << 14));
    if (const int code = parse(app, args, out, err); code >= 0) return code;

    const StructuredTriMesh mesh = friedrichs_keller(n);
    const SparseSPD a = assemble_stiffness(mesh);
    const SparseSPD m = assemble_mass(mesh);
    out << "n=" << n << " h=" << format_real(mesh.h) << '\n'
        << "nodes=" << mesh.num_nodes() << " triangles=" << mesh.triangles.size()
        << " interior=" << mesh.num_dofs() << " boundary=" << mesh.boundary_ids.size() << '\n'
        << "stiffness_nnz=" << a.matrix().nonZeros() << " mass_nnz=" << m.matrix().nonZeros() << '\n'
        << "mass_total=" << format_real(m.matrix().sum()) << '\n';
    return kExitOk;
}

// ----------------------------------------------------------- solve-obstacle

int cmd_solve_obstacle(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Solve a discrete obstacle problem by the primal-dual active set method",
                 "obstakit solve-obstacle");
    base_options(app);
    std::string geometry = "square", load = "constant", lower_s = "auto", upper_s = "auto", mass = "consistent";
    std::string out_dir = ".", prefix = "obstacle";
    int n = 32, max_iter = 500;
    double scale = 1.0, nu = 1e-5, c = 1.0, tol = kFeasibilityTol;
    app.add_option("--geometry", geometry)->check(CLI::IsMember({"square", "chain1d"}));
    app.add_option("--n", n, "subdivisions (cells per side)")->check(CLI::Range(2, 1 << 14));
    app.add_option("--load", load)->check(CLI::IsMember({"zero", "constant", "bump", "ramp-z0"}));
    app.add_option("--scale", scale, "load amplitude")->check(kFinite);
    app.add_option("--nu", nu, "control cost, used by ramp-z0")->check(CLI::PositiveNumber);
    app.add_option("--lower", lower_s)->check(kBound);
    app.add_option("--upper", upper_s)->check(kBound);
    app.add_option("--mass", mass)->check(CLI::IsMember({"consistent", "lumped"}));
    app.add_option("--c", c, "PDAS constant")->check(CLI::PositiveNumber);
    app.add_option("--max_iter", max_iter)->check(CLI::PositiveNumber);
    app.add_option("--tol", tol)->check(CLI::PositiveNumber);
    app.add_option("--out_dir", out_dir);
    app.add_option("--prefix", prefix);
    if (const int code = parse(app, args, out, err); code >= 0) return code;
    if (geometry == "chain1d" && load == "ramp-z0") {
        err << "config error: load ramp-z0 needs geometry=square\n";
        return kExitConfig;
    }

    const bool ramp = load == "ramp-z0";
    const double lower_v = bound_value(lower_s == "auto" ? (ramp ? "-5" : "none") : lower_s, -kInf);
    const double upper_v = bound_value(upper_s == "auto" ? (ramp ? "5" : "none") : upper_s, kInf);
    if (!(lower_v < upper_v)) {
        err << "config error: lower bound must be below upper bound\n";
        return kExitConfig;
    }

    ObstacleProblem problem;
    StructuredTriMesh mesh;
    double cell_measure = 0.0;
    std::vector<double> chain_x;
    if (geometry == "square") {
        mesh = friedrichs_keller(n);
        cell_measure = mesh.h * mesh.h;
        const SparseSPD a = assemble_stiffness(mesh);
        const SparseSPD m = assemble_mass(mesh, mass_variant(mass));
        NodalField g(mesh.num_dofs());
        if (load == "constant") g = interpolate(mesh, [&](double, double) { return scale; });
        if (load == "bump")
            g = interpolate(mesh, [&](double x, double y) { return scale * std::sin(kPi * x) * std::sin(kPi * y); });
        DualVector f = m.apply(g);
        if (ramp) {
            const ControlProblem cp = make_control_problem(
                n, nu, [](double x, double y) { return 10.0 * (1.0 - x - y); }, [&](double, double) { return lower_v; },
                [&](double, double) { return upper_v; }, mass_variant(mass));
            const NodalField z(poisson_solve(cp.stiffness, cp.mass.apply(cp.target)).values() / nu);
            f = cp.mass.apply(z);
        }
        problem = ObstacleProblem{a, f, Eigen::VectorXd::Constant(a.dim(), lower_v),
                                  Eigen::VectorXd::Constant(a.dim(), upper_v)};
    } else {
        // Unscaled stiffness tridiag(-1, 2, -1) = h A_1D pairs with the mass h M_1D ~ h^2 I.
        const int nodes = n - 1;
        const double h = 1.0 / n;
        cell_measure = h * h;
        Eigen::VectorXd f(nodes);
        for (int i = 0; i < nodes; ++i) {
            const double x = (i + 1) * h;
            chain_x.push_back(x);
            const double g = load == "zero" ? 0.0 : load == "constant" ? scale : scale * std::sin(kPi * x);
            f[i] = h * h * g;
        }
        problem = ObstacleProblem{experiments::chain_stiffness(nodes), DualVector(f),
                                  Eigen::VectorXd::Constant(nodes, lower_v), Eigen::VectorXd::Constant(nodes, upper_v)};
    }

    PdasOptions opts;
    opts.c = c;
    opts.max_iter = max_iter;
    opts.tol = tol;
    ObstacleSolution sol;
    DecompositionReport dec;
    try {
        sol = solve_bilateral(problem, opts);
        dec = cross_check_decomposition(sol, problem, opts);
    } catch (const ConvergenceError& e) {
        err << "not converged: " << e.what() << " (residual " << format_real(e.residual()) << ", iterations "
            << e.iterations() << ")\n";
        return kExitNonConvergence;
    }

    const fs::path dir = prepare_dir(out_dir);
    const Eigen::VectorXd flags = activity_flags(sol);
    const Eigen::VectorXd density = sol.multiplier.values() / cell_measure;
    if (geometry == "square") {
        const std::vector<io::NamedField> fields{{"state", all_nodes(mesh, sol.state.values())},
                                                 {"multiplier", all_nodes(mesh, sol.multiplier.values())},
                                                 {"multiplier_density", all_nodes(mesh, density)},
                                                 {"active", all_nodes(mesh, flags)}};
        io::node_table(mesh, fields).write((dir / (prefix + ".csv")).string());
        io::write_vtk((dir / (prefix + ".vtk")).string(), mesh, "obstacle solution", fields);
    } else {
        io::CsvTable t;
        t.header = {"node", "x", "state", "multiplier", "active"};
        for (int i = 0; i < problem.dim(); ++i)
            t.rows.push_back({std::to_string(i), format_real(chain_x[i]), format_real(sol.state[i]),
                              format_real(sol.multiplier[i]), format_real(flags[i])});
        t.write((dir / (prefix + ".csv")).string());
    }

    out << "dofs=" << problem.dim() << " pdas_iterations=" << sol.iterations
        << " active_lower=" << sol.active_lower.size() << " active_upper=" << sol.active_upper.size() << '\n'
        << "kkt feasibility=" << fmt("%.3e", sol.kkt.feasibility) << " sign=" << fmt("%.3e", sol.kkt.sign)
        << " complementarity=" << fmt("%.3e", sol.kkt.complementarity)
        << " stationarity=" << fmt("%.3e", sol.kkt.stationarity) << '\n'
        << "decomposition_deviation=" << fmt("%.3e", dec.max()) << '\n';
    const bool ok = sol.kkt_residual <= tol && dec.max() <= 10.0 * tol;
    if (!ok) err << "contract failure: KKT residual or decomposition deviation above tolerance\n";
    return ok ? kExitOk : kExitContract;
}

// ------------------------------------------------------------ solve-control

int cmd_solve_control(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Semismooth Newton method for the box-constrained control problem", "obstakit solve-control");
    base_options(app);
    int n = 64, max_iter = 50;
    double nu = 1e-5, tol = 1e-12;
    std::string target = "ramp", lower_s = "-5", upper_s = "5", mass = "consistent";
    std::string out_dir = ".", prefix = "control";
    app.add_option("--n", n)->check(CLI::Range(2, 1 << 14));
    app.add_option("--nu", nu)->check(CLI::PositiveNumber);
    app.add_option("--target", target)->check(CLI::IsMember({"ramp", "zero"}));
    app.add_option("--lower", lower_s)->check(kBound);
    app.add_option("--upper", upper_s)->check(kBound);
    app.add_option("--mass", mass)->check(CLI::IsMember({"consistent", "lumped"}));
    app.add_option("--tol", tol)->check(CLI::PositiveNumber);
    app.add_option("--max_iter", max_iter)->check(CLI::PositiveNumber);
    app.add_option("--out_dir", out_dir);
    app.add_option("--prefix", prefix);
    if (const int code = parse(app, args, out, err); code >= 0) return code;
    const double lower_v = bound_value(lower_s == "auto" ? "-5" : lower_s, -kInf);
    const double upper_v = bound_value(upper_s == "auto" ? "5" : upper_s, kInf);
    if (!(lower_v < upper_v)) {
        err << "config error: lower bound must be below upper bound\n";
        return kExitConfig;
    }

    const ControlProblem problem = make_control_problem(
        n, nu,
        target == "zero" ? ScalarField([](double, double) { return 0.0; })
                         : ScalarField([](double x, double y) { return 10.0 * (1.0 - x - y); }),
        [&](double, double) { return lower_v; }, [&](double, double) { return upper_v; }, mass_variant(mass));
    ControlOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;

    ControlRun run;
    bool converged = true;
    try {
        run = solve_control(problem, NodalField::zero(problem.dim()), opts);
    } catch (const ControlNonConvergence& e) {
        run = e.run();
        converged = false;
    } catch (const ConvergenceError& e) {
        err << "not converged: " << e.what() << '\n';
        return kExitNonConvergence;
    }

    const fs::path dir = prepare_dir(out_dir);
    io::CsvTable res;
    res.header = {"iteration", "residual", "inactive_nodes", "status"};
    for (std::size_t i = 0; i < run.iterates.size(); ++i) {
        const ControlIterate& it = run.iterates[i];
        const bool last = i + 1 == run.iterates.size();
        const int inactive = newton_inactive_set(it.obstacle, control_obstacle_problem(problem, it.z)).size();
        res.rows.push_back({std::to_string(i), format_real(it.residual), std::to_string(inactive),
                            last && converged ? "converged" : "newton"});
        out << "iteration " << i << " residual " << fmt("%.6e", it.residual) << " inactive " << inactive << '\n';
    }
    res.write((dir / (prefix + "_residuals.csv")).string());
    if (!converged) {
        err << "not converged within " << max_iter << " Newton steps\n";
        return kExitNonConvergence;
    }

    const ControlIterate& last = run.iterates.back();
    const StructuredTriMesh& mesh = problem.mesh;
    const Eigen::VectorXd density = last.obstacle.multiplier.values() / (mesh.h * mesh.h);
    const std::vector<io::NamedField> fields{{"control", all_nodes(mesh, run.control.values())},
                                             {"state", all_nodes(mesh, run.state.values())},
                                             {"multiplier", all_nodes(mesh, last.obstacle.multiplier.values())},
                                             {"multiplier_density", all_nodes(mesh, density)}};
    io::node_table(mesh, fields).write((dir / (prefix + "_fields.csv")).string());
    io::write_vtk((dir / (prefix + ".vtk")).string(), mesh, "optimal control and multiplier", fields);

    double inactive_multiplier = 0.0;
    for (int i : last.obstacle.inactive.indices())
        inactive_multiplier = std::max(inactive_multiplier, std::abs(last.obstacle.multiplier[i]));
    out << "newton_iterations=" << run.iterations << " verified_residual=" << fmt("%.3e", run.verified_residual)
        << " max_inactive_multiplier=" << fmt("%.3e", inactive_multiplier) << '\n';
    const bool ok = run.verified_residual <= tol && inactive_multiplier == 0.0;
    if (!ok) err << "contract failure: re-evaluated residual above tolerance\n";
    return ok ? kExitOk : kExitContract;
}

// ------------------------------------------------------------------- table1

std::string width_label(int n) { return "1/" + std::to_string(n); }

int cmd_table1(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Newton iteration counts across mesh widths", "obstakit table1");
    base_options(app);
    std::vector<int> ns{32, 64, 128, 256};
    std::string mass = "consistent", out_dir = ".", prefix = "table1";
    double tol = 1e-12;
    int max_iter = 50;
    app.add_option("--ns", ns, "subdivisions per side, comma separated")
        ->delimiter(',')
        ->check(CLI::Range(2, 1 << 14));
    app.add_option("--mass", mass)->check(CLI::IsMember({"consistent", "lumped"}));
    app.add_option("--tol", tol)->check(CLI::PositiveNumber);
    app.add_option("--max_iter", max_iter)->check(CLI::PositiveNumber);
    app.add_option("--out_dir", out_dir);
    app.add_option("--prefix", prefix);
    if (const int code = parse(app, args, out, err); code >= 0) return code;

    ControlOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    const experiments::Table1Result result = experiments::run_table1(ns, mass_variant(mass), opts, false);

    io::CsvTable csv;
    csv.header = {"mesh_width"};
    std::vector<std::string> iters{"iterations"};
    for (const auto& row : result.rows) {
        csv.header.push_back(width_label(row.n));
        iters.push_back(row.converged ? std::to_string(row.iterations) : "nc");
    }
    csv.rows.push_back(iters);
    const fs::path dir = prepare_dir(out_dir);
    csv.write((dir / (prefix + ".csv")).string());

    std::size_t w = std::string("iterations").size();
    for (const auto& row : result.rows) w = std::max(w, width_label(row.n).size());
    std::ostringstream text;
    auto cell = [&](const std::string& s) {
        text << std::string(w + 2 - std::min(w + 2, s.size()), ' ') << s;
    };
    cell("h");
    for (const auto& row : result.rows) cell(width_label(row.n));
    text << '\n';
    cell("iterations");
    for (std::size_t k = 1; k < iters.size(); ++k) cell(iters[k]);
    text << '\n';
    const bool independent = result.mesh_independent();
    text << "mesh-independence: " << (independent ? "PASS" : "FAIL") << '\n';
    io::write_text((dir / (prefix + ".txt")).string(), text.str());
    out << text.str() << "elapsed_seconds=" << fmt("%.2f", result.seconds) << '\n';

    const bool all_converged =
        std::all_of(result.rows.begin(), result.rows.end(), [](const auto& r) { return r.converged; });
    if (!all_converged) return kExitNonConvergence;
    return independent ? kExitOk : kExitContract;
}

// ---------------------------------------------------------- subspace-verify

int cmd_subspace_verify(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app("Property suite for the angled-subspace projection calculus", "obstakit subspace-verify");
    base_options(app);
    std::uint64_t seed = 20261016;
    int trials = 100, max_dim = 40, bridge_n = 8, bridge_pairs = 20;
    double tol = 1e-9;
    app.add_option("--seed", seed);
    app.add_option("--trials", trials)->check(CLI::NonNegativeNumber);
    app.add_option("--max_dim", max_dim)->check(CLI::Range(2, 200));
    app.add_option("--bridge_n", bridge_n)->check(CLI::Range(2, 22));
    app.add_option("--bridge_pairs", bridge_pairs)->check(CLI::NonNegativeNumber);
    app.add_option("--tol", tol)->check(CLI::PositiveNumber);
    if (const int code = parse(app, args, out, err); code >= 0) return code;

    const experiments::SubspaceSuiteReport r = experiments::subspace_suite(seed, trials, max_dim);
    const experiments::BridgeSuiteReport b = experiments::bridge_suite(bridge_n, bridge_pairs, seed);
    const std::vector<std::pair<std::string, double>> lines{
        {"symmetry", r.symmetry},         {"pythagoras", r.pythagoras},         {"product_norm", r.product_norm},
        {"sum_projector", r.sum_projector}, {"closed_form", r.closed_form},     {"series", r.series},
        {"series_monotone", r.series_monotone}, {"neumann", r.neumann},         {"round_trip", r.round_trip},
        {"inverse_bound", r.inverse_bound}, {"bridge", b.max_deviation}};
    out << "instances=" << r.instances << " max_dim=" << r.max_dim << " max_c0=" << fmt("%.6f", r.max_c0)
        << " series_checked=" << r.series_checked << " bridge_pairs=" << b.pairs << '\n';
    bool ok = true;
    for (const auto& [name, v] : lines) {
        const bool pass = v <= tol;
        ok = ok && pass;
        out << name << ' ' << fmt("%.3e", v) << ' ' << (pass ? "ok" : "FAIL") << '\n';
    }
    out << "degenerate " << r.degenerate_rejected << '/' << r.degenerate_trials << " rejected\n";
    ok = ok && r.degenerate_rejected == r.degenerate_trials;
    if (!ok) err << "contract failure: a subspace property exceeded the tolerance\n";
    return ok ? kExitOk : kExitContract;
}

const std::map<std::string, int (*)(const std::vector<std::string>&, std::ostream&, std::ostream&)> kCommands{
    {"mesh-info", cmd_mesh_info},
    {"solve-obstacle", cmd_solve_obstacle},
    {"solve-control", cmd_solve_control},
    {"table1", cmd_table1},
    {"subspace-verify", cmd_subspace_verify},
};

void usage(std::ostream& os) {
    os << "usage: obstakit <command> [--config FILE] [--key=value ...]\ncommands:";
    for (const auto& [name, fn] : kCommands) os << ' ' << name;
    os << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    kernels::configure_threads_from_env();
    if (args.empty()) {
        usage(err);
        return kExitConfig;
    }
    if (args[0] == "--help" || args[0] == "-h") {
        usage(out);
        return kExitOk;
    }
    const auto it = kCommands.find(args[0]);
    if (it == kCommands.end()) {
        err << "unknown command '" << args[0] << "'\n";
        usage(err);
        return kExitConfig;
    }
    try {
        return it->second(std::vector<std::string>(args.begin() + 1, args.end()), out, err);
    } catch (const InvalidArgument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidInput& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitContract;
    }
}

}  // namespace obstakit::cli
