#pragma once

// Structured triangulations of the unit square and DOF numbering for the
// P2 (velocity, concentration) and P1 (pressure) spaces.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "stabfem/fe.hpp"

namespace stabfem {

// Each grid cell is split along its bottom-left -> top-right diagonal, so the
// mesh has (n+1)^2 vertices and 2n^2 congruent right triangles. Edge k of a
// triangle joins local vertices k and (k+1)%3; edge midpoints carry the extra
// P2 nodes, numbered after the vertices.
struct Mesh {
    int n = 0;
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;   // CCW vertex indices
    std::vector<std::array<int, 2>> edges;       // vertex pairs, lower index first
    std::vector<std::array<int, 3>> tri_edges;   // edge index per local edge
    std::vector<bool> boundary_vertex;
    std::vector<bool> boundary_edge;
    double h = 0.0;                              // max element diameter

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }

    // Global midpoint-node index of an edge (P2 numbering).
    int edge_midpoint_node(int edge) const { return n_vertices() + edge; }

    Vec2 edge_midpoint(int edge) const {
        const auto& [a, b] = edges[edge];
        return {0.5 * (vertices[a][0] + vertices[b][0]),
                0.5 * (vertices[a][1] + vertices[b][1])};
    }

    ElementGeometry geometry(int cell) const {
        const auto& t = triangles[cell];
        return element_geometry(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    }

    double element_diameter(int cell) const {
        const auto& t = triangles[cell];
        double d = 0.0;
        for (int k = 0; k < 3; ++k) {
            const Vec2& a = vertices[t[k]];
            const Vec2& b = vertices[t[(k + 1) % 3]];
            d = std::max(d, std::hypot(b[0] - a[0], b[1] - a[1]));
        }
        return d;
    }
};

inline Mesh build_structured_mesh(int n) {
    if (n < 1) throw std::invalid_argument("build_structured_mesh: n must be >= 1");

    Mesh m;
    m.n = n;
    const int np = n + 1;
    m.vertices.reserve(static_cast<size_t>(np) * np);
    m.boundary_vertex.assign(static_cast<size_t>(np) * np, false);
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i) {
            m.vertices.push_back({double(i) / n, double(j) / n});
            if (i == 0 || i == n || j == 0 || j == n)
                m.boundary_vertex[static_cast<size_t>(j) * np + i] = true;
        }

    auto vid = [np](int i, int j) { return j * np + i; };
    m.triangles.reserve(static_cast<size_t>(2) * n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }

    // Edge table keyed by sorted vertex pair; adjacency count of one marks a
    // boundary edge.
    std::map<std::array<int, 2>, int> edge_of;
    std::vector<int> adjacency;
    m.tri_edges.resize(m.triangles.size());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const auto& tri = m.triangles[t];
        for (int k = 0; k < 3; ++k) {
            std::array<int, 2> key{tri[k], tri[(k + 1) % 3]};
            if (key[0] > key[1]) std::swap(key[0], key[1]);
            auto [it, inserted] = edge_of.try_emplace(key, m.n_edges());
            if (inserted) {
                m.edges.push_back(key);
                adjacency.push_back(0);
            }
            ++adjacency[it->second];
            m.tri_edges[t][k] = it->second;
        }
    }
    m.boundary_edge.resize(m.edges.size());
    for (int e = 0; e < m.n_edges(); ++e) m.boundary_edge[e] = adjacency[e] == 1;

    for (int t = 0; t < m.n_triangles(); ++t)
        m.h = std::max(m.h, m.element_diameter(t));
    return m;
}

struct DofMap {
    int degree = 0;
    int n_dofs = 0;
    int n_cells = 0;
    std::vector<int> cell_to_dofs;    // flattened, stride = dofs_per_cell()
    std::vector<int> dirichlet_dofs;  // sorted boundary DOF indices

    int dofs_per_cell() const { return degree == 1 ? 3 : 6; }

    std::span<const int> cell_dofs(int cell) const {
        return {cell_to_dofs.data() + static_cast<size_t>(cell) * dofs_per_cell(),
                static_cast<size_t>(dofs_per_cell())};
    }
};

inline DofMap build_dof_map(const Mesh& mesh, int degree) {
    if (degree != 1 && degree != 2)
        throw std::invalid_argument("build_dof_map: degree must be 1 or 2");

    DofMap dm;
    dm.degree = degree;
    dm.n_cells = mesh.n_triangles();
    const int stride = dm.dofs_per_cell();
    dm.cell_to_dofs.resize(static_cast<size_t>(dm.n_cells) * stride);
    for (int t = 0; t < dm.n_cells; ++t) {
        int* out = dm.cell_to_dofs.data() + static_cast<size_t>(t) * stride;
        for (int k = 0; k < 3; ++k) out[k] = mesh.triangles[t][k];
        if (degree == 2)
            for (int k = 0; k < 3; ++k)
                out[3 + k] = mesh.edge_midpoint_node(mesh.tri_edges[t][k]);
    }

    dm.n_dofs = degree == 1 ? mesh.n_vertices() : mesh.n_vertices() + mesh.n_edges();
    for (int v = 0; v < mesh.n_vertices(); ++v)
        if (mesh.boundary_vertex[v]) dm.dirichlet_dofs.push_back(v);
    if (degree == 2)
        for (int e = 0; e < mesh.n_edges(); ++e)
            if (mesh.boundary_edge[e]) dm.dirichlet_dofs.push_back(mesh.edge_midpoint_node(e));
    return dm;
}

// Coordinates of every DOF node, in DOF order (vertices, then midpoints).
inline std::vector<Vec2> dof_coordinates(const Mesh& mesh, const DofMap& dm) {
    std::vector<Vec2> coords(mesh.vertices.begin(), mesh.vertices.end());
    if (dm.degree == 2) {
        coords.reserve(dm.n_dofs);
        for (int e = 0; e < mesh.n_edges(); ++e) coords.push_back(mesh.edge_midpoint(e));
    }
    return coords;
}

}  // namespace stabfem
