#pragma once

#include <string>
#include <utility>
#include <vector>

#include "obstakit/mesh.hpp"

namespace obstakit::io {

/// Shortest-roundtrip-safe fixed rendering: printf "%.17g".
std::string format_real(double x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string str() const;
    void write(const std::string& path) const;
};

using NamedField = std::pair<std::string, std::vector<double>>;

/// One row per mesh node: node,x1,x2,<fields...>. Fields are given on all nodes.
CsvTable node_table(const StructuredTriMesh& mesh, const std::vector<NamedField>& fields);

/// Legacy ASCII VTK 3.0, UNSTRUCTURED_GRID of triangles with point scalars.
std::string vtk_string(const StructuredTriMesh& mesh, const std::string& title, const std::vector<NamedField>& fields);
void write_vtk(const std::string& path, const StructuredTriMesh& mesh, const std::string& title,
               const std::vector<NamedField>& fields);

void write_text(const std::string& path, const std::string& content);

}  // namespace obstakit::io
