#pragma once

#include <array>
#include <functional>
#include <vector>

#include "obstakit/fields.hpp"
#include "obstakit/kernels.hpp"
#include "obstakit/sparse.hpp"

namespace obstakit {

/// Friedrichs-Keller triangulation of the unit square: an n x n grid of cells,
/// each split along its bottom-left to top-right diagonal. Nodes are numbered
/// lexicographically by (x2, x1); interior dofs follow the same order.
struct StructuredTriMesh {
    int n = 0;
    double h = 0.0;
    std::vector<std::array<double, 2>> node_coords;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> interior_ids;
    std::vector<int> boundary_ids;
    /// node id -> interior dof, -1 on the boundary
    std::vector<int> dof_of_node;

    int num_nodes() const { return static_cast<int>(node_coords.size()); }
    int num_dofs() const { return static_cast<int>(interior_ids.size()); }
    const std::array<double, 2>& dof_coords(int dof) const { return node_coords[interior_ids[dof]]; }
};

StructuredTriMesh friedrichs_keller(int n);

enum class MassVariant { consistent, lumped };

using kernels::Exec;

/// P1 stiffness matrix on interior nodes (Dirichlet rows and columns eliminated).
SparseSPD assemble_stiffness(const StructuredTriMesh& mesh, Exec exec = Exec::parallel);

/// P1 mass matrix on interior nodes. The lumped variant uses full row sums,
/// i.e. the integral of each hat function.
SparseSPD assemble_mass(const StructuredTriMesh& mesh, MassVariant variant = MassVariant::consistent,
                        Exec exec = Exec::parallel);

/// Nodal interpolant at interior nodes. Throws InvalidInput on non-finite values.
NodalField interpolate(const StructuredTriMesh& mesh,
                       const std::function<double(double, double)>& f);

/// Expands an interior vector to all mesh nodes with zero boundary values.
std::vector<double> to_all_nodes(const StructuredTriMesh& mesh, const Eigen::VectorXd& interior);

}  // namespace obstakit
