#include "obstakit/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "obstakit/errors.hpp"

namespace obstakit::io {

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string CsvTable::str() const {
    std::string out;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out;
}

void CsvTable::write(const std::string& path) const { write_text(path, str()); }

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

CsvTable node_table(const StructuredTriMesh& mesh, const std::vector<NamedField>& fields) {
    CsvTable t;
    t.header = {"node", "x1", "x2"};
    for (const auto& [name, values] : fields) {
        if (static_cast<int>(values.size()) != mesh.num_nodes())
            throw InvalidArgument("node_table: field '" + name + "' has the wrong length");
        t.header.push_back(name);
    }
    t.rows.reserve(mesh.num_nodes());
    for (int k = 0; k < mesh.num_nodes(); ++k) {
        std::vector<std::string> row{std::to_string(k), format_real(mesh.node_coords[k][0]),
                                     format_real(mesh.node_coords[k][1])};
        for (const auto& f : fields) row.push_back(format_real(f.second[k]));
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string vtk_string(const StructuredTriMesh& mesh, const std::string& title, const std::vector<NamedField>& fields) {
    std::ostringstream out;
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_nodes() << " double\n";
    for (const auto& p : mesh.node_coords) out << format_real(p[0]) << ' ' << format_real(p[1]) << " 0\n";
    const std::size_t nt = mesh.triangles.size();
    out << "CELLS " << nt << ' ' << 4 * nt << '\n';
    for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    out << "CELL_TYPES " << nt << '\n';
    for (std::size_t i = 0; i < nt; ++i) out << "5\n";
    if (!fields.empty()) out << "POINT_DATA " << mesh.num_nodes() << '\n';
    for (const auto& [name, values] : fields) {
        if (static_cast<int>(values.size()) != mesh.num_nodes())
            throw InvalidArgument("vtk: field '" + name + "' has the wrong length");
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : values) out << format_real(v) << '\n';
    }
    return out.str();
}

void write_vtk(const std::string& path, const StructuredTriMesh& mesh, const std::string& title,
               const std::vector<NamedField>& fields) {
    write_text(path, vtk_string(mesh, title, fields));
}

}  // namespace obstakit::io
