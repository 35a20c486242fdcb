#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp; the tests hold the
// two to agreement and bench/ times them against each other.
//
// Reductions use a fixed block partition that does not depend on the thread
// count, so results are bitwise reproducible for any OBSTAKIT_THREADS.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace obstakit::kernels {

/// Read-only view of a compressed-row matrix.
struct CsrView {
    int rows = 0;
    std::span<const int> row_ptr;
    std::span<const int> col_idx;
    std::span<const double> values;
};

/// One assembled row: column indices ascending with matching values.
struct SparseRow {
    std::vector<int> cols;
    std::vector<double> vals;
};

/// Triangle input for P1 assembly: vertex coordinates and triangle vertex ids.
struct TriangleSoup {
    std::span<const std::array<double, 2>> points;
    std::span<const std::array<int, 3>> triangles;
    /// Global node id -> interior dof index, -1 for eliminated nodes.
    std::span<const int> dof_of_node;
    int num_dofs = 0;
};

enum class ElementForm { stiffness, consistent_mass, lumped_mass };

/// Execution path selector for callers that expose both kernel families.
enum class Exec { serial, parallel };

/// Block size used by the deterministic reductions.
inline constexpr std::size_t kReductionBlock = 4096;

namespace serial {

void csr_matvec(const CsrView& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
/// y <- y + alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y <- x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y);
/// Classic element loop; rows returned sorted by column.
std::vector<SparseRow> assemble(const TriangleSoup& mesh, ElementForm form);

}  // namespace serial

namespace omp {

void csr_matvec(const CsrView& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);
/// Row-parallel gather over the triangles incident to each dof.
std::vector<SparseRow> assemble(const TriangleSoup& mesh, ElementForm form);

}  // namespace omp

/// Local 3x3 element matrix for one triangle.
std::array<std::array<double, 3>, 3> element_matrix(const std::array<double, 2>& p0,
                                                    const std::array<double, 2>& p1,
                                                    const std::array<double, 2>& p2,
                                                    ElementForm form);

/// Caps OpenMP worker threads from OBSTAKIT_THREADS, if set. Returns the cap in effect.
int configure_threads_from_env();

}  // namespace obstakit::kernels
