#include "obstakit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "obstakit/errors.hpp"
#include "obstakit/io.hpp"

namespace obstakit::oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

EnumerationResult enumerate_obstacle(const DenseMatrix& a, const VectorXd& f, const VectorXd& lower,
                                     const VectorXd& upper, double tol) {
    const int n = static_cast<int>(a.rows());
    if (n > kEnumerationLimit)
        throw SizeError("enumerate_obstacle: " + std::to_string(n) + " nodes exceeds the limit of " +
                        std::to_string(kEnumerationLimit));
    const double scale = std::max(1.0, f.cwiseAbs().maxCoeff());
    long total = 1;
    for (int i = 0; i < n; ++i) total *= 3;

    EnumerationResult result;
    std::vector<Activity> act(n);
    for (long code = 0; code < total; ++code) {
        long c = code;
        bool usable = true;
        for (int i = 0; i < n; ++i) {
            act[i] = static_cast<Activity>(c % 3);
            c /= 3;
            if ((act[i] == Activity::lower && !std::isfinite(lower[i])) ||
                (act[i] == Activity::upper && !std::isfinite(upper[i])))
                usable = false;
        }
        if (!usable) continue;

        VectorXd y = VectorXd::Zero(n);
        std::vector<int> free_idx;
        for (int i = 0; i < n; ++i) {
            if (act[i] == Activity::lower) y[i] = lower[i];
            else if (act[i] == Activity::upper) y[i] = upper[i];
            else free_idx.push_back(i);
        }
        if (!free_idx.empty()) {
            const int m = static_cast<int>(free_idx.size());
            MatrixXd sub(m, m);
            VectorXd rhs(m);
            const VectorXd known = f - a * y;
            for (int r = 0; r < m; ++r) {
                rhs[r] = known[free_idx[r]];
                for (int s = 0; s < m; ++s) sub(r, s) = a(free_idx[r], free_idx[s]);
            }
            const VectorXd sol = sub.fullPivLu().solve(rhs);
            for (int r = 0; r < m; ++r) y[free_idx[r]] = sol[r];
        }
        VectorXd lambda = f - a * y;
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            if (y[i] < lower[i] - tol * std::max(1.0, std::abs(lower[i]))) ok = false;
            if (y[i] > upper[i] + tol * std::max(1.0, std::abs(upper[i]))) ok = false;
            if (act[i] == Activity::lower && lambda[i] > tol * scale) ok = false;
            if (act[i] == Activity::upper && lambda[i] < -tol * scale) ok = false;
            if (act[i] == Activity::inactive) lambda[i] = 0.0;
        }
        if (!ok) continue;
        if (result.admissible.empty()) {
            result.state = y;
            result.multiplier = lambda;
        } else {
            result.state_spread = std::max(result.state_spread, (y - result.state).cwiseAbs().maxCoeff());
        }
        result.admissible.push_back(act);
    }
    if (result.admissible.empty()) throw std::runtime_error("enumerate_obstacle: no assignment satisfies the KKT system");
    return result;
}

DenseMatrix dense_sum_projector(const DenseMatrix& gram, const DenseMatrix& gens1, const DenseMatrix& gens2,
                                double rank_tol) {
    const Eigen::Index n = gram.rows();
    MatrixXd gens(n, gens1.cols() + gens2.cols());
    if (gens1.cols() > 0) gens.leftCols(gens1.cols()) = gens1;
    if (gens2.cols() > 0) gens.rightCols(gens2.cols()) = gens2;
    if (gens.cols() == 0) return MatrixXd::Zero(n, n);
    // G = L L^T; in coordinates L^T x the inner product is Euclidean.
    const MatrixXd l = gram.llt().matrixL();
    const MatrixXd transformed = l.transpose() * gens;
    Eigen::JacobiSVD<MatrixXd> svd(transformed, Eigen::ComputeThinU);
    const VectorXd& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv[rank] > rank_tol * sv[0]) ++rank;
    const MatrixXd u = svd.matrixU().leftCols(rank);
    const MatrixXd euclid = u * u.transpose();
    // P = L^{-T} euclid L^T
    const MatrixXd right = euclid * l.transpose();
    return l.transpose().triangularView<Eigen::Upper>().solve(right);
}

VectorXd fd_directional_derivative(const VectorMap& map, const VectorXd& u, const VectorXd& h, double t) {
    if (t == 0.0) throw InvalidArgument("fd_directional_derivative: t must be nonzero");
    return (map(u + t * h) - map(u)) / t;
}

namespace {

struct DenseReduced {
    MatrixXd hessian;
    VectorXd linear;
};

DenseReduced dense_reduced(const ControlProblem& p) {
    const MatrixXd a = p.stiffness.to_dense();
    const MatrixXd m = p.mass.to_dense();
    const MatrixXd s = a.llt().solve(m);  // A^{-1} M
    DenseReduced r;
    r.hessian = s.transpose() * m * s + p.nu * a;
    r.hessian = 0.5 * (r.hessian + r.hessian.transpose());
    r.linear = s.transpose() * (m * p.target.values());
    return r;
}

}  // namespace

ProjectedGradientResult projected_gradient_control(const ControlProblem& p, int max_steps, double rate, double tol) {
    const DenseReduced red = dense_reduced(p);
    const double lip = Eigen::SelfAdjointEigenSolver<MatrixXd>(red.hessian, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double step = rate / lip;
    auto project = [&](const VectorXd& v) { return v.cwiseMax(p.lower).cwiseMin(p.upper); };
    auto value = [&](const VectorXd& v) { return 0.5 * v.dot(red.hessian * v) - red.linear.dot(v); };

    ProjectedGradientResult out;
    VectorXd u = project(VectorXd::Zero(p.dim()));
    VectorXd prev = u;
    VectorXd momentum = u;
    double theta = 1.0;
    double f_prev = value(u);
    for (int k = 1; k <= max_steps; ++k) {
        const VectorXd next = project(momentum - step * (red.hessian * momentum - red.linear));
        const double f_next = value(next);
        if (f_next > f_prev && theta > 1.0) {
            // adaptive restart; the plain step that follows is accepted even if
            // round-off in the objective reports an increase
            theta = 1.0;
            momentum = u;
            continue;
        }
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        momentum = next + ((theta - 1.0) / theta_next) * (next - u);
        prev = u;
        u = next;
        theta = theta_next;
        f_prev = f_next;
        out.steps = k;
        const VectorXd fixed = project(u - step * (red.hessian * u - red.linear));
        out.fixed_point_residual = (u - fixed).cwiseAbs().maxCoeff();
        if (out.fixed_point_residual <= tol) {
            out.converged = true;
            break;
        }
    }
    out.control = u;
    return out;
}

VectorXd dense_unconstrained_control(const ControlProblem& p) {
    const DenseReduced red = dense_reduced(p);
    return red.hessian.llt().solve(red.linear);
}

void write_fixture(const std::string& path, const Fixture& fixture) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_fixture: cannot open " + path);
    out << "# seed=" << fixture.seed << " generator=" << fixture.generator << " count=" << fixture.values.size()
        << '\n';
    for (double v : fixture.values) out << io::format_real(v) << '\n';
}

Fixture read_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_fixture: cannot open " + path);
    Fixture fx;
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string hash, token;
    hs >> hash;
    if (hash != "#") throw std::runtime_error("read_fixture: missing header in " + path);
    while (hs >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const std::string val = token.substr(eq + 1);
        if (key == "seed") fx.seed = std::stoull(val);
        else if (key == "generator") fx.generator = val;
    }
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) fx.values.push_back(std::stod(line));
    return fx;
}

}  // namespace obstakit::oracles
