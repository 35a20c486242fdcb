#include "obstakit/mesh.hpp"

#include <cmath>
#include <string>

#include "obstakit/errors.hpp"

namespace obstakit {

StructuredTriMesh friedrichs_keller(int n) {
    if (n < 2) throw InvalidArgument("friedrichs_keller: need n >= 2 subdivisions, got " + std::to_string(n));
    StructuredTriMesh mesh;
    mesh.n = n;
    mesh.h = 1.0 / n;
    const int side = n + 1;
    mesh.node_coords.reserve(static_cast<std::size_t>(side) * side);
    mesh.dof_of_node.assign(static_cast<std::size_t>(side) * side, -1);
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            const int id = j * side + i;
            // i/n rather than i*h keeps the end points exactly 0 and 1
            mesh.node_coords.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
            if (i == 0 || j == 0 || i == n || j == n) {
                mesh.boundary_ids.push_back(id);
            } else {
                mesh.dof_of_node[id] = static_cast<int>(mesh.interior_ids.size());
                mesh.interior_ids.push_back(id);
            }
        }
    }
    mesh.triangles.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int bl = j * side + i;
            const int br = bl + 1;
            const int tl = bl + side;
            const int tr = tl + 1;
            mesh.triangles.push_back({bl, br, tr});
            mesh.triangles.push_back({bl, tr, tl});
        }
    }
    return mesh;
}

namespace {

SparseSPD assemble(const StructuredTriMesh& mesh, kernels::ElementForm form, Exec exec) {
    const kernels::TriangleSoup soup{mesh.node_coords, mesh.triangles, mesh.dof_of_node, mesh.num_dofs()};
    auto rows = exec == Exec::serial ? kernels::serial::assemble(soup, form) : kernels::omp::assemble(soup, form);
    return SparseSPD::from_rows(rows);
}

}  // namespace

SparseSPD assemble_stiffness(const StructuredTriMesh& mesh, Exec exec) {
    return assemble(mesh, kernels::ElementForm::stiffness, exec);
}

SparseSPD assemble_mass(const StructuredTriMesh& mesh, MassVariant variant, Exec exec) {
    return assemble(mesh,
                    variant == MassVariant::lumped ? kernels::ElementForm::lumped_mass
                                                   : kernels::ElementForm::consistent_mass,
                    exec);
}

NodalField interpolate(const StructuredTriMesh& mesh, const std::function<double(double, double)>& f) {
    NodalField out(mesh.num_dofs());
    for (int k = 0; k < mesh.num_dofs(); ++k) {
        const auto& x = mesh.dof_coords(k);
        const double v = f(x[0], x[1]);
        if (!std::isfinite(v))
            throw InvalidInput("interpolate: non-finite value at (" + std::to_string(x[0]) + ", " +
                               std::to_string(x[1]) + ")");
        out[k] = v;
    }
    return out;
}

std::vector<double> to_all_nodes(const StructuredTriMesh& mesh, const Eigen::VectorXd& interior) {
    if (interior.size() != mesh.num_dofs()) throw InvalidArgument("to_all_nodes: length mismatch");
    std::vector<double> out(mesh.node_coords.size(), 0.0);
    for (int k = 0; k < mesh.num_dofs(); ++k) out[mesh.interior_ids[k]] = interior[k];
    return out;
}

}  // namespace obstakit
