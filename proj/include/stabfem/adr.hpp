#pragma once

// Steady advection-diffusion-reaction transport of a scalar concentration,
//
//   -d/dx(D1 dc/dx) - d/dy(D2 dc/dy) + u . grad c + alpha c = g,  c = 0 on the boundary,
//
// discretized with P2 elements. The advecting velocity is either the discrete
// flow solution or an analytic field. The Galerkin form is
//
//   (D1 dc/dx, dd/dx) + (D2 dc/dy, dd/dy) + (d, u . grad c) + alpha (c, d) = (g, d)
//
// and the subgrid-scale variant adds, element by element,
//
//   tau3 (-Ladj d, L c - g),   tau3 = (9 D/(4 h^2) + 3 U/(2 h) + alpha)^{-1},
//
// where L is the strong operator, Ladj its adjoint (advection sign flipped),
// and D, U are the element-local diffusion bound and speed at the centroid.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stabfem/fe.hpp"
#include "stabfem/fields.hpp"
#include "stabfem/mesh.hpp"
#include "stabfem/solvers.hpp"
#include "stabfem/sparse.hpp"
#include "stabfem/stokes_darcy.hpp"

namespace stabfem {

struct TransportProblem {
    ScalarField D1;      // diffusion along x, with analytic gradient
    ScalarField D2;      // diffusion along y
    double alpha = 0.0;  // reaction constant
    ScalarFn g;          // source
};

inline double compute_tau3(double d_k, double u_k, double alpha, double h_k) {
    if (d_k < 0.0 || u_k < 0.0 || alpha < 0.0 || !(h_k > 0.0))
        throw std::invalid_argument("compute_tau3: negative coefficient or bad h");
    const double denom = 9.0 * d_k / (4.0 * h_k * h_k) + 3.0 * u_k / (2.0 * h_k) + alpha;
    if (!(denom > 0.0))
        throw std::invalid_argument("compute_tau3: all denominator terms vanish");
    return 1.0 / denom;
}

// Advecting velocity: analytic, or the discrete P2 flow solution evaluated
// through its basis expansion on the owning cell.
class VelocityField {
  public:
    static VelocityField analytic(VectorFn f) {
        VelocityField v;
        v.analytic_ = std::move(f);
        return v;
    }

    static VelocityField discrete(const Mesh& mesh, const DofMap& dm_v,
                                  std::vector<double> u1, std::vector<double> u2) {
        if (dm_v.degree != 2 || static_cast<int>(u1.size()) != dm_v.n_dofs ||
            static_cast<int>(u2.size()) != dm_v.n_dofs)
            throw std::invalid_argument("VelocityField::discrete: DOF vector mismatch");
        VelocityField v;
        v.mesh_ = &mesh;
        v.dm_ = &dm_v;
        v.u1_ = std::move(u1);
        v.u2_ = std::move(u2);
        return v;
    }

    static VelocityField from_flow(const Mesh& mesh, const DofMap& dm_v,
                                   const FlowSolution& flow) {
        return discrete(mesh, dm_v, flow.u1, flow.u2);
    }

    bool is_discrete() const { return mesh_ != nullptr; }

    // Evaluation inside `cell` at reference point (xr, yr) / physical (x, y).
    std::array<double, 2> eval(int cell, double xr, double yr, double x, double y) const {
        if (!is_discrete()) return analytic_(x, y);
        const BasisValues b = eval_basis(2, xr, yr);
        const auto dofs = dm_->cell_dofs(cell);
        double vx = 0.0, vy = 0.0;
        for (int i = 0; i < 6; ++i) {
            vx += u1_[dofs[i]] * b.value[i];
            vy += u2_[dofs[i]] * b.value[i];
        }
        return {vx, vy};
    }

    const Mesh* mesh() const { return mesh_; }

  private:
    VectorFn analytic_;
    const Mesh* mesh_ = nullptr;
    const DofMap* dm_ = nullptr;
    std::vector<double> u1_, u2_;
};

// Element-representative diffusion and speed entering tau3: D is the larger
// diffusion coefficient at the centroid, U the velocity magnitude there.
inline std::pair<double, double> element_diffusion_speed(const Mesh& mesh, int cell,
                                                         const TransportProblem& prob,
                                                         const VelocityField& vel) {
    const ElementGeometry geom = mesh.geometry(cell);
    const Vec2 c = map_to_physical(geom, 1.0 / 3.0, 1.0 / 3.0);
    const double d_k = std::max(prob.D1.value(c[0], c[1]), prob.D2.value(c[0], c[1]));
    const auto u = vel.eval(cell, 1.0 / 3.0, 1.0 / 3.0, c[0], c[1]);
    return {d_k, std::hypot(u[0], u[1])};
}

inline SparseSystem assemble_adr(const Mesh& mesh, const DofMap& dm_c,
                                 const TransportProblem& prob, const VelocityField& vel,
                                 Method method,
                                 std::optional<double> tau3_override = std::nullopt) {
    if (dm_c.degree != 2 || dm_c.n_cells != mesh.n_triangles())
        throw std::invalid_argument("assemble_adr: DOF map does not match the mesh");
    if (vel.is_discrete() && vel.mesh() != &mesh)
        throw std::invalid_argument("assemble_adr: velocity lives on a different mesh");

    static const detail::ElementTables tables(kAssemblyQuadratureDegree);
    const int nq = tables.quad.size();

    TripletBuffer trip;
    trip.reserve(static_cast<size_t>(mesh.n_triangles()) * 36);
    std::vector<double> rhs(static_cast<size_t>(dm_c.n_dofs), 0.0);

    double local[6][6], rloc[6];
    std::array<Vec2, 6> grad;
    std::array<double, 6> lap;
    for (int cell = 0; cell < mesh.n_triangles(); ++cell) {
        const ElementGeometry geom = mesh.geometry(cell);
        const auto dofs = dm_c.cell_dofs(cell);

        const bool with_sgs = method == Method::Sgs &&
                              !(tau3_override && *tau3_override == 0.0);
        double tau3 = 0.0;
        if (with_sgs) {
            if (tau3_override) {
                tau3 = *tau3_override;
            } else {
                const auto [d_k, u_k] = element_diffusion_speed(mesh, cell, prob, vel);
                tau3 = compute_tau3(d_k, u_k, prob.alpha, mesh.element_diameter(cell));
            }
        }

        std::fill(&local[0][0], &local[0][0] + 36, 0.0);
        std::fill(rloc, rloc + 6, 0.0);

        for (int q = 0; q < nq; ++q) {
            const double w = tables.quad.weights[q] * geom.det;
            const BasisValues& b = tables.p2[q];
            const double xr = tables.quad.points[q][0], yr = tables.quad.points[q][1];
            const Vec2 xq = map_to_physical(geom, xr, yr);

            for (int i = 0; i < 6; ++i) {
                grad[i] = physical_gradient(geom, b.grad[i]);
            }
            const double d1 = prob.D1.value(xq[0], xq[1]);
            const double d2 = prob.D2.value(xq[0], xq[1]);
            const auto u = vel.eval(cell, xr, yr, xq[0], xq[1]);
            const double gq = prob.g(xq[0], xq[1]);

            for (int i = 0; i < 6; ++i) {
                rloc[i] += w * gq * b.value[i];
                for (int j = 0; j < 6; ++j)
                    local[i][j] +=
                        w * (d1 * grad[i][0] * grad[j][0] + d2 * grad[i][1] * grad[j][1] +
                             b.value[i] * (u[0] * grad[j][0] + u[1] * grad[j][1]) +
                             prob.alpha * b.value[i] * b.value[j]);
            }

            if (!with_sgs) continue;

            const double d1x = prob.D1.dx(xq[0], xq[1]);
            const double d2y = prob.D2.dy(xq[0], xq[1]);
            double strong[6], neg_adjoint[6];
            for (int i = 0; i < 6; ++i) {
                const auto h = physical_hessian(geom, b.hess[i]);
                // div(Dtilde grad phi) expanded by the product rule
                const double diff = d1 * h[0] + d1x * grad[i][0] + d2 * h[2] + d2y * grad[i][1];
                const double adv = u[0] * grad[i][0] + u[1] * grad[i][1];
                strong[i] = -diff + adv + prob.alpha * b.value[i];
                neg_adjoint[i] = diff + adv - prob.alpha * b.value[i];
            }
            for (int i = 0; i < 6; ++i) {
                rloc[i] += w * tau3 * neg_adjoint[i] * gq;
                for (int j = 0; j < 6; ++j)
                    local[i][j] += w * tau3 * neg_adjoint[i] * strong[j];
            }
        }

        for (int i = 0; i < 6; ++i) {
            rhs[dofs[i]] += rloc[i];
            for (int j = 0; j < 6; ++j) trip.add(dofs[i], dofs[j], local[i][j]);
        }
    }

    SparseSystem sys;
    sys.matrix = to_csr(trip, dm_c.n_dofs);
    sys.rhs = std::move(rhs);
    sys.blocks = {{DofBlock::Scalar, dm_c.n_dofs}};
    return sys;
}

inline std::vector<double> solve_adr(const Mesh& mesh, const TransportProblem& prob,
                                     const VelocityField& vel, Method method,
                                     const LinearSolverOptions& opts = {},
                                     int* iterations = nullptr) {
    const DofMap dm_c = build_dof_map(mesh, 2);
    SparseSystem sys = assemble_adr(mesh, dm_c, prob, vel, method);
    sys = apply_dirichlet_zero(sys, dm_c.dirichlet_dofs);
    auto [x, iters] = solve_system(sys, opts);
    if (iterations) *iterations = iters;
    for (int d : dm_c.dirichlet_dofs) x[d] = 0.0;
    return x;
}

}  // namespace stabfem
