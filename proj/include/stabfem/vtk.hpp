#pragma once

// Legacy ASCII VTK (version 3.0) unstructured-grid export: POINTS, CELLS with
// type-5 triangles, and optional scalar/vector point data on the vertices.

#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stabfem/mesh.hpp"

namespace stabfem {

struct VtkPointScalars {
    std::string name;
    std::span<const double> values;  // one per vertex
};

struct VtkPointVectors {
    std::string name;
    std::span<const double> x;  // one per vertex
    std::span<const double> y;
};

inline void write_legacy_vtk(std::ostream& os, const Mesh& mesh,
                             const std::vector<VtkPointScalars>& scalars = {},
                             const std::vector<VtkPointVectors>& vectors = {},
                             const std::string& title = "stabfem fields") {
    const int nv = mesh.n_vertices();
    const int nt = mesh.n_triangles();
    char buf[128];

    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n";
    os << "DATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << nv << " double\n";
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.9g %.9g 0\n", v[0], v[1]);
        os << buf;
    }
    os << "CELLS " << nt << " " << 4 * nt << "\n";
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    os << "CELL_TYPES " << nt << "\n";
    for (int i = 0; i < nt; ++i) os << "5\n";

    if (scalars.empty() && vectors.empty()) return;
    os << "POINT_DATA " << nv << "\n";
    for (const auto& s : scalars) {
        if (static_cast<int>(s.values.size()) < nv)
            throw std::invalid_argument("write_legacy_vtk: scalar field too short");
        os << "SCALARS " << s.name << " double 1\nLOOKUP_TABLE default\n";
        for (int i = 0; i < nv; ++i) {
            std::snprintf(buf, sizeof buf, "%.9g\n", s.values[i]);
            os << buf;
        }
    }
    for (const auto& v : vectors) {
        if (static_cast<int>(v.x.size()) < nv || static_cast<int>(v.y.size()) < nv)
            throw std::invalid_argument("write_legacy_vtk: vector field too short");
        os << "VECTORS " << v.name << " double\n";
        for (int i = 0; i < nv; ++i) {
            std::snprintf(buf, sizeof buf, "%.9g %.9g 0\n", v.x[i], v.y[i]);
            os << buf;
        }
    }
}

}  // namespace stabfem
