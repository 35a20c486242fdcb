#include "obstakit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include <omp.h>

namespace obstakit::kernels {

std::array<std::array<double, 3>, 3> element_matrix(const std::array<double, 2>& p0,
                                                    const std::array<double, 2>& p1,
                                                    const std::array<double, 2>& p2,
                                                    ElementForm form) {
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    const double area = 0.5 * std::abs(det);
    std::array<std::array<double, 3>, 3> k{};
    switch (form) {
    case ElementForm::stiffness: {
        // Barycentric gradients, scaled by det.
        const double gx[3] = {p1[1] - p2[1], p2[1] - p0[1], p0[1] - p1[1]};
        const double gy[3] = {p2[0] - p1[0], p0[0] - p2[0], p1[0] - p0[0]};
        const double scale = area / (det * det);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) k[a][b] = scale * (gx[a] * gx[b] + gy[a] * gy[b]);
        break;
    }
    case ElementForm::consistent_mass:
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) k[a][b] = area / 12.0 * (a == b ? 2.0 : 1.0);
        break;
    case ElementForm::lumped_mass:
        for (int a = 0; a < 3; ++a) k[a][a] = area / 3.0;
        break;
    }
    return k;
}

namespace {

void accumulate(SparseRow& row, int col, double v) {
    for (std::size_t i = 0; i < row.cols.size(); ++i) {
        if (row.cols[i] == col) {
            row.vals[i] += v;
            return;
        }
    }
    row.cols.push_back(col);
    row.vals.push_back(v);
}

void sort_row(SparseRow& row) {
    std::vector<std::size_t> order(row.cols.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return row.cols[a] < row.cols[b]; });
    SparseRow sorted;
    sorted.cols.reserve(order.size());
    sorted.vals.reserve(order.size());
    for (auto i : order) {
        sorted.cols.push_back(row.cols[i]);
        sorted.vals.push_back(row.vals[i]);
    }
    row = std::move(sorted);
}

std::size_t num_blocks(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

}  // namespace

namespace serial {

void csr_matvec(const CsrView& a, std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.values[k] * x[a.col_idx[k]];
        y[i] = s;
    }
}

double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * y[i];
}

std::vector<SparseRow> assemble(const TriangleSoup& mesh, ElementForm form) {
    std::vector<SparseRow> rows(mesh.num_dofs);
    for (const auto& tri : mesh.triangles) {
        const auto k = element_matrix(mesh.points[tri[0]], mesh.points[tri[1]],
                                      mesh.points[tri[2]], form);
        for (int a = 0; a < 3; ++a) {
            const int ra = mesh.dof_of_node[tri[a]];
            if (ra < 0) continue;
            for (int b = 0; b < 3; ++b) {
                const int cb = mesh.dof_of_node[tri[b]];
                if (cb < 0) continue;
                if (form == ElementForm::lumped_mass && a != b) continue;
                accumulate(rows[ra], cb, k[a][b]);
            }
        }
    }
    for (auto& r : rows) sort_row(r);
    return rows;
}

}  // namespace serial

namespace omp {

void csr_matvec(const CsrView& a, std::span<const double> x, std::span<double> y) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.values[k] * x[a.col_idx[k]];
        y[i] = s;
    }
}

double dot(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    const std::size_t nb = num_blocks(n);
    std::vector<double> partial(nb, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t lo = b * kReductionBlock;
        const std::size_t hi = std::min(n, lo + kReductionBlock);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += x[i] * y[i];
        partial[b] = s;
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

std::vector<SparseRow> assemble(const TriangleSoup& mesh, ElementForm form) {
    // node -> incident triangles, ascending triangle order
    const std::size_t num_nodes = mesh.points.size();
    std::vector<int> start(num_nodes + 1, 0);
    for (const auto& tri : mesh.triangles)
        for (int v : tri) ++start[v + 1];
    for (std::size_t i = 0; i < num_nodes; ++i) start[i + 1] += start[i];
    std::vector<int> incident(start.back());
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t)
        for (int v : mesh.triangles[t]) incident[fill[v]++] = t;

    std::vector<int> node_of_dof(mesh.num_dofs, -1);
    for (std::size_t node = 0; node < num_nodes; ++node)
        if (mesh.dof_of_node[node] >= 0) node_of_dof[mesh.dof_of_node[node]] = static_cast<int>(node);

    std::vector<SparseRow> rows(mesh.num_dofs);
#pragma omp parallel for schedule(dynamic, 256)
    for (int dof = 0; dof < mesh.num_dofs; ++dof) {
        const int node = node_of_dof[dof];
        SparseRow& row = rows[dof];
        for (int k = start[node]; k < start[node + 1]; ++k) {
            const auto& tri = mesh.triangles[incident[k]];
            const auto em = element_matrix(mesh.points[tri[0]], mesh.points[tri[1]],
                                           mesh.points[tri[2]], form);
            int a = 0;
            while (tri[a] != node) ++a;
            for (int b = 0; b < 3; ++b) {
                const int cb = mesh.dof_of_node[tri[b]];
                if (cb < 0) continue;
                if (form == ElementForm::lumped_mass && a != b) continue;
                accumulate(row, cb, em[a][b]);
            }
        }
        sort_row(row);
    }
    return rows;
}

}  // namespace omp

int configure_threads_from_env() {
    if (const char* env = std::getenv("OBSTAKIT_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) omp_set_num_threads(n);
        } catch (const std::exception&) {
            // ignored: fall back to the OpenMP default
        }
    }
    return omp_get_max_threads();
}

}  // namespace obstakit::kernels
