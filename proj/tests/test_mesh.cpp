#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "stabfem/mesh.hpp"
#include "stabfem/vtk.hpp"
#include "test_support.hpp"

using namespace stabfem;

TEST_CASE("smallest mesh n=1") {
    const Mesh m = build_structured_mesh(1);
    CHECK(m.n_vertices() == 4);
    CHECK(m.n_triangles() == 2);
    CHECK(std::count(m.boundary_vertex.begin(), m.boundary_vertex.end(), true) == 4);
}

TEST_CASE("n=2 counts and mesh size") {
    const Mesh m = build_structured_mesh(2);
    CHECK(m.n_vertices() == 9);
    CHECK(m.n_triangles() == 8);
    CHECK(std::count(m.boundary_vertex.begin(), m.boundary_vertex.end(), true) == 8);
    CHECK_THAT(m.h, Catch::Matchers::WithinAbs(std::sqrt(2.0) / 2.0, 1e-14));
}

TEST_CASE("n=0 rejected") {
    CHECK_THROWS_AS(build_structured_mesh(0), std::invalid_argument);
    CHECK_THROWS_AS(build_structured_mesh(-3), std::invalid_argument);
}

TEST_CASE("areas tile the unit square") {
    for (int n : {1, 2, 3, 10, 17}) {
        const Mesh m = build_structured_mesh(n);
        double total = 0.0;
        for (const auto& t : m.triangles) {
            const double area = test_support::shoelace_area(m.vertices[t[0]], m.vertices[t[1]],
                                                            m.vertices[t[2]]);
            CHECK(area > 0.0);
            total += area;
        }
        CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK_THAT(m.h, Catch::Matchers::WithinAbs(std::sqrt(2.0) / n, 1e-14));
    }
    const Mesh m10 = build_structured_mesh(10);
    CHECK(m10.n_vertices() == 121);
    CHECK(m10.n_triangles() == 200);
}

TEST_CASE("boundary vertices lie exactly on the boundary") {
    const Mesh m = build_structured_mesh(7);
    for (int v = 0; v < m.n_vertices(); ++v) {
        const auto [x, y] = m.vertices[v];
        const bool on_boundary = x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0;
        CHECK(m.boundary_vertex[v] == on_boundary);
    }
}

TEST_CASE("dof counts") {
    CHECK(build_dof_map(build_structured_mesh(1), 1).n_dofs == 4);
    CHECK(build_dof_map(build_structured_mesh(10), 2).n_dofs == 441);

    const Mesh m2 = build_structured_mesh(2);
    const DofMap dm = build_dof_map(m2, 2);
    CHECK(dm.n_dofs == 25);
    CHECK(dm.dirichlet_dofs.size() == 16);
}

TEST_CASE("invalid degree rejected") {
    const Mesh m = build_structured_mesh(2);
    CHECK_THROWS_AS(build_dof_map(m, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_dof_map(m, 3), std::invalid_argument);
}

TEST_CASE("dof indices in range and conforming across shared edges") {
    const Mesh m = build_structured_mesh(5);
    for (int degree : {1, 2}) {
        const DofMap dm = build_dof_map(m, degree);
        // every vertex-pair of an edge must map to exactly one midpoint DOF
        std::map<std::array<int, 2>, std::set<int>> midpoint_of;
        for (int cell = 0; cell < m.n_triangles(); ++cell) {
            const auto dofs = dm.cell_dofs(cell);
            for (int d : dofs) {
                CHECK(d >= 0);
                CHECK(d < dm.n_dofs);
            }
            if (degree == 2)
                for (int k = 0; k < 3; ++k) {
                    std::array<int, 2> key{m.triangles[cell][k], m.triangles[cell][(k + 1) % 3]};
                    if (key[0] > key[1]) std::swap(key[0], key[1]);
                    midpoint_of[key].insert(dofs[3 + k]);
                }
        }
        for (const auto& [edge, dofs] : midpoint_of) CHECK(dofs.size() == 1);
    }
}

TEST_CASE("degree-2 Dirichlet set equals the geometric boundary nodes") {
    const Mesh m = build_structured_mesh(6);
    const DofMap dm = build_dof_map(m, 2);
    const auto coords = dof_coordinates(m, dm);
    std::set<int> geometric;
    for (int d = 0; d < dm.n_dofs; ++d) {
        const auto [x, y] = coords[d];
        if (std::min({x, 1.0 - x, y, 1.0 - y}) == 0.0) geometric.insert(d);
    }
    const std::set<int> dirichlet(dm.dirichlet_dofs.begin(), dm.dirichlet_dofs.end());
    CHECK(dirichlet == geometric);
    CHECK(std::is_sorted(dm.dirichlet_dofs.begin(), dm.dirichlet_dofs.end()));
}

TEST_CASE("vtk mesh export layout") {
    const Mesh m = build_structured_mesh(2);
    std::ostringstream os;
    write_legacy_vtk(os, m);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "# vtk DataFile Version 3.0");
    std::getline(is, line);  // title
    std::getline(is, line);
    CHECK(line == "ASCII");
    std::getline(is, line);
    CHECK(line == "DATASET UNSTRUCTURED_GRID");
    std::getline(is, line);
    CHECK(line == "POINTS 9 double");
    for (int i = 0; i < 9; ++i) std::getline(is, line);
    std::getline(is, line);
    CHECK(line == "CELLS 8 32");
    for (int i = 0; i < 8; ++i) {
        std::getline(is, line);
        CHECK(line.substr(0, 2) == "3 ");
    }
    std::getline(is, line);
    CHECK(line == "CELL_TYPES 8");
    for (int i = 0; i < 8; ++i) {
        std::getline(is, line);
        CHECK(line == "5");
    }
}
