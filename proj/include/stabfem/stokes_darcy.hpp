#pragma once

// Assembly and solution of the Stokes-Darcy(Brinkman) system
//
//   -mu Lap(u) + sigma u + grad p = f,   div u = 0,   u = 0 on the boundary,
//
// with P2 velocity components and P1 pressure. The Galerkin form is
//
//   mu (grad u, grad v) + sigma (u, v) - (div v, p) + (div u, q) = (f, v),
//
// and the subgrid-scale variant adds, element by element,
//
//   sum_i tau1 (mu Lap v_i - sigma v_i + d_i q, -mu Lap u_i + sigma u_i + d_i p - f_i)
//   + tau2 (div v, div u)
//
// with tau1 = (c1 mu/h^2 + sigma)^{-1} and tau2 = c2 mu. Unknowns are laid
// out as [u1 | u2 | p], with a trailing Lagrange multiplier enforcing the
// zero-mean pressure gauge once fix_pressure has run.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stabfem/fe.hpp"
#include "stabfem/fields.hpp"
#include "stabfem/mesh.hpp"
#include "stabfem/solvers.hpp"
#include "stabfem/sparse.hpp"

namespace stabfem {

struct FlowProblem {
    double mu = 1.0;     // viscosity, positive constant
    double sigma = 1.0;  // inverse permeability, positive constant
    VectorFn f;          // body force

    void validate() const {
        if (!(mu > 0.0) || !(sigma > 0.0))
            throw std::invalid_argument("FlowProblem: mu and sigma must be positive");
    }
};

// The velocity block stays coercive only while tau1 * ||mu Lap v - sigma v||^2
// <= mu ||grad v||^2 + sigma ||v||^2 elementwise, which for P2 on the
// structured right-triangle meshes requires c1 >= 96 (the squared inverse
// constant, measured numerically). c1 = 4 loses coercivity by a factor ~24
// and hits near-singular meshes mid-ladder.
struct FlowStabilization {
    double c1 = 128.0;
    double c2 = 1.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
};

inline FlowStabilization compute_flow_taus(double mu, double sigma, double h, double c1,
                                           double c2) {
    if (!(mu > 0.0) || !(sigma > 0.0) || !(h > 0.0) || !(c1 > 0.0) || !(c2 > 0.0))
        throw std::invalid_argument("compute_flow_taus: all inputs must be positive");
    FlowStabilization s;
    s.c1 = c1;
    s.c2 = c2;
    s.tau1 = 1.0 / (c1 * mu / (h * h) + sigma);
    s.tau2 = c2 * mu;
    return s;
}

struct FlowSolution {
    std::vector<double> u1;  // P2 DOF values
    std::vector<double> u2;
    std::vector<double> p;   // P1 DOF values
    double div_u_l2 = 0.0;   // ||div u_h||_{L2}
    int iterations = 0;      // 0 for the direct solver
};

enum class Method { Galerkin, Sgs };

inline Method parse_method(const std::string& s) {
    if (s == "galerkin") return Method::Galerkin;
    if (s == "sgs") return Method::Sgs;
    throw std::invalid_argument("unknown method '" + s + "' (expected galerkin|sgs)");
}

// Quadrature degree used by every assembly and error loop. High enough for
// the quadratic coefficient fields times P2 x P2 gradient products.
inline constexpr int kAssemblyQuadratureDegree = 6;

namespace detail {

inline void check_flow_maps(const Mesh& mesh, const DofMap& dm_v, const DofMap& dm_p) {
    if (dm_v.degree != 2 || dm_p.degree != 1 || dm_v.n_cells != mesh.n_triangles() ||
        dm_p.n_cells != mesh.n_triangles())
        throw std::invalid_argument("flow assembly: DOF maps do not match the mesh");
}

// Reference-element data shared by all cells of one assembly pass.
struct ElementTables {
    QuadratureRule quad;
    std::vector<BasisValues> p2;  // per quadrature point
    std::vector<BasisValues> p1;

    explicit ElementTables(int quad_degree) : quad(quadrature_rule(quad_degree)) {
        for (int q = 0; q < quad.size(); ++q) {
            p2.push_back(eval_basis(2, quad.points[q][0], quad.points[q][1]));
            p1.push_back(eval_basis(1, quad.points[q][0], quad.points[q][1]));
        }
    }
};

}  // namespace detail

inline SparseSystem assemble_flow(const Mesh& mesh, const DofMap& dm_v, const DofMap& dm_p,
                                  const FlowProblem& prob,
                                  const std::optional<FlowStabilization>& stab) {
    detail::check_flow_maps(mesh, dm_v, dm_p);
    prob.validate();

    const int nv = dm_v.n_dofs;
    const int np = dm_p.n_dofs;
    const int total = 2 * nv + np;
    const int off_u2 = nv, off_p = 2 * nv;

    const bool with_sgs = stab && (stab->tau1 != 0.0 || stab->tau2 != 0.0);
    const double tau1 = with_sgs ? stab->tau1 : 0.0;
    const double tau2 = with_sgs ? stab->tau2 : 0.0;

    static const detail::ElementTables tables(kAssemblyQuadratureDegree);
    const int nq = tables.quad.size();

    TripletBuffer trip;
    trip.reserve(static_cast<size_t>(mesh.n_triangles()) * (with_sgs ? 225 : 120));
    std::vector<double> rhs(static_cast<size_t>(total), 0.0);

    // Local blocks: velocity-velocity (per component pair), velocity-pressure,
    // pressure-velocity, pressure-pressure.
    double a11[6][6], a22[6][6], a12[6][6], a21[6][6];
    double bup1[6][3], bup2[6][3], bpu1[3][6], bpu2[3][6], cpp[3][3];
    double ru1[6], ru2[6], rp[3];
    std::array<Vec2, 6> g2;
    std::array<double, 6> lap2;

    for (int cell = 0; cell < mesh.n_triangles(); ++cell) {
        const ElementGeometry geom = mesh.geometry(cell);
        const auto vdofs = dm_v.cell_dofs(cell);
        const auto pdofs = dm_p.cell_dofs(cell);

        std::fill(&a11[0][0], &a11[0][0] + 36, 0.0);
        std::fill(&a22[0][0], &a22[0][0] + 36, 0.0);
        std::fill(&a12[0][0], &a12[0][0] + 36, 0.0);
        std::fill(&a21[0][0], &a21[0][0] + 36, 0.0);
        std::fill(&bup1[0][0], &bup1[0][0] + 18, 0.0);
        std::fill(&bup2[0][0], &bup2[0][0] + 18, 0.0);
        std::fill(&bpu1[0][0], &bpu1[0][0] + 18, 0.0);
        std::fill(&bpu2[0][0], &bpu2[0][0] + 18, 0.0);
        std::fill(&cpp[0][0], &cpp[0][0] + 9, 0.0);
        std::fill(ru1, ru1 + 6, 0.0);
        std::fill(ru2, ru2 + 6, 0.0);
        std::fill(rp, rp + 3, 0.0);

        // P1 gradients are constant on the element.
        std::array<Vec2, 3> g1;
        for (int a = 0; a < 3; ++a) g1[a] = physical_gradient(geom, tables.p1.front().grad[a]);

        for (int q = 0; q < nq; ++q) {
            const double w = tables.quad.weights[q] * geom.det;
            const BasisValues& b2 = tables.p2[q];
            const BasisValues& b1 = tables.p1[q];
            physical_gradients_and_laplacians(geom, b2, g2, lap2);
            const Vec2 xq =
                map_to_physical(geom, tables.quad.points[q][0], tables.quad.points[q][1]);
            const auto fq = prob.f(xq[0], xq[1]);

            for (int i = 0; i < 6; ++i) {
                ru1[i] += w * fq[0] * b2.value[i];
                ru2[i] += w * fq[1] * b2.value[i];
                for (int j = 0; j < 6; ++j) {
                    const double a_ij =
                        w * (prob.mu * (g2[i][0] * g2[j][0] + g2[i][1] * g2[j][1]) +
                             prob.sigma * b2.value[i] * b2.value[j]);
                    a11[i][j] += a_ij;
                    a22[i][j] += a_ij;
                }
                for (int a = 0; a < 3; ++a) {
                    bup1[i][a] -= w * g2[i][0] * b1.value[a];  // -(div v, p)
                    bup2[i][a] -= w * g2[i][1] * b1.value[a];
                    bpu1[a][i] += w * g2[i][0] * b1.value[a];  // +(div u, q)
                    bpu2[a][i] += w * g2[i][1] * b1.value[a];
                }
            }

            if (!with_sgs) continue;

            // Momentum residual pieces: trial -mu Lap + sigma, test mu Lap - sigma.
            double mom_trial[6], mom_test[6];
            for (int i = 0; i < 6; ++i) {
                mom_trial[i] = -prob.mu * lap2[i] + prob.sigma * b2.value[i];
                mom_test[i] = prob.mu * lap2[i] - prob.sigma * b2.value[i];
            }

            for (int i = 0; i < 6; ++i) {
                ru1[i] += w * tau1 * mom_test[i] * fq[0];
                ru2[i] += w * tau1 * mom_test[i] * fq[1];
                for (int j = 0; j < 6; ++j) {
                    const double mm = w * tau1 * mom_test[i] * mom_trial[j];
                    a11[i][j] += mm + w * tau2 * g2[i][0] * g2[j][0];
                    a22[i][j] += mm + w * tau2 * g2[i][1] * g2[j][1];
                    a12[i][j] += w * tau2 * g2[i][0] * g2[j][1];
                    a21[i][j] += w * tau2 * g2[i][1] * g2[j][0];
                }
                for (int a = 0; a < 3; ++a) {
                    bup1[i][a] += w * tau1 * mom_test[i] * g1[a][0];
                    bup2[i][a] += w * tau1 * mom_test[i] * g1[a][1];
                    bpu1[a][i] += w * tau1 * g1[a][0] * mom_trial[i];
                    bpu2[a][i] += w * tau1 * g1[a][1] * mom_trial[i];
                }
            }
            for (int a = 0; a < 3; ++a) {
                rp[a] += w * tau1 * (g1[a][0] * fq[0] + g1[a][1] * fq[1]);
                for (int b = 0; b < 3; ++b)
                    cpp[a][b] += w * tau1 * (g1[a][0] * g1[b][0] + g1[a][1] * g1[b][1]);
            }
        }

        for (int i = 0; i < 6; ++i) {
            const int vi = vdofs[i];
            rhs[vi] += ru1[i];
            rhs[off_u2 + vi] += ru2[i];
            for (int j = 0; j < 6; ++j) {
                const int vj = vdofs[j];
                trip.add(vi, vj, a11[i][j]);
                trip.add(off_u2 + vi, off_u2 + vj, a22[i][j]);
                if (with_sgs) {
                    trip.add(vi, off_u2 + vj, a12[i][j]);
                    trip.add(off_u2 + vi, vj, a21[i][j]);
                }
            }
            for (int a = 0; a < 3; ++a) {
                const int pa = off_p + pdofs[a];
                trip.add(vi, pa, bup1[i][a]);
                trip.add(off_u2 + vi, pa, bup2[i][a]);
                trip.add(pa, vi, bpu1[a][i]);
                trip.add(pa, off_u2 + vi, bpu2[a][i]);
            }
        }
        if (with_sgs)
            for (int a = 0; a < 3; ++a) {
                rhs[off_p + pdofs[a]] += rp[a];
                for (int b = 0; b < 3; ++b)
                    trip.add(off_p + pdofs[a], off_p + pdofs[b], cpp[a][b]);
            }
    }

    SparseSystem sys;
    sys.matrix = to_csr(trip, total);
    sys.rhs = std::move(rhs);
    sys.blocks = {{DofBlock::U1, nv}, {DofBlock::U2, nv}, {DofBlock::Pressure, np}};
    return sys;
}

inline SparseSystem assemble_flow_galerkin(const Mesh& mesh, const DofMap& dm_v,
                                           const DofMap& dm_p, const FlowProblem& prob) {
    return assemble_flow(mesh, dm_v, dm_p, prob, std::nullopt);
}

inline SparseSystem assemble_flow_sgs(const Mesh& mesh, const DofMap& dm_v,
                                      const DofMap& dm_p, const FlowProblem& prob,
                                      const FlowStabilization& stab) {
    return assemble_flow(mesh, dm_v, dm_p, prob, stab);
}

// Replaces the rows and columns of the given DOFs by the identity with zero
// right-hand side. Exact for homogeneous Dirichlet data.
inline SparseSystem apply_dirichlet_zero(const SparseSystem& sys,
                                         const std::vector<int>& dofs) {
    sys.check_consistent();
    std::vector<bool> fixed(static_cast<size_t>(sys.dimension()), false);
    for (int d : dofs) {
        if (d < 0 || d >= sys.dimension())
            throw std::out_of_range("apply_dirichlet_zero: DOF out of range");
        fixed[d] = true;
    }

    const CsrMatrix& m = sys.matrix;
    TripletBuffer trip;
    trip.reserve(m.values.size());
    for (int r = 0; r < m.n; ++r) {
        if (fixed[r]) {
            trip.add(r, r, 1.0);
            continue;
        }
        for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k)
            if (!fixed[m.col_indices[k]]) trip.add(r, m.col_indices[k], m.values[k]);
    }

    SparseSystem out;
    out.matrix = to_csr(trip, m.n);
    out.rhs = sys.rhs;
    for (int d : dofs) out.rhs[d] = 0.0;
    out.blocks = sys.blocks;
    return out;
}

// Velocity Dirichlet DOFs are the boundary P2 DOFs of both components.
inline SparseSystem apply_velocity_dirichlet(const SparseSystem& sys, const DofMap& dm_v) {
    std::vector<int> dofs;
    dofs.reserve(2 * dm_v.dirichlet_dofs.size());
    for (int d : dm_v.dirichlet_dofs) dofs.push_back(d);
    for (int d : dm_v.dirichlet_dofs) dofs.push_back(dm_v.n_dofs + d);
    return apply_dirichlet_zero(sys, dofs);
}

// Appends a Lagrange multiplier row/column enforcing the zero-mean pressure
// gauge, with the exact P1 integral weights (area/3 per vertex).
inline SparseSystem fix_pressure(const SparseSystem& sys, const Mesh& mesh,
                                 const DofMap& dm_p) {
    sys.check_consistent();
    int off_p = 0;
    bool found = false;
    for (const auto& [label, size] : sys.blocks) {
        if (label == DofBlock::Pressure) {
            found = true;
            break;
        }
        off_p += size;
    }
    if (!found || sys.blocks.back().first == DofBlock::Multiplier)
        throw std::logic_error("fix_pressure: system has no free pressure block");

    std::vector<double> weights(static_cast<size_t>(dm_p.n_dofs), 0.0);
    for (int cell = 0; cell < mesh.n_triangles(); ++cell) {
        const double area = 0.5 * mesh.geometry(cell).det;
        for (int a : dm_p.cell_dofs(cell)) weights[a] += area / 3.0;
    }

    const CsrMatrix& m = sys.matrix;
    const int total = m.n + 1;
    TripletBuffer trip;
    trip.reserve(m.values.size() + 2 * weights.size());
    for (int r = 0; r < m.n; ++r)
        for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k)
            trip.add(r, m.col_indices[k], m.values[k]);
    for (int a = 0; a < dm_p.n_dofs; ++a) {
        trip.add(off_p + a, m.n, weights[a]);
        trip.add(m.n, off_p + a, weights[a]);
    }

    SparseSystem out;
    out.matrix = to_csr(trip, total);
    out.rhs = sys.rhs;
    out.rhs.push_back(0.0);
    out.blocks = sys.blocks;
    out.blocks.emplace_back(DofBlock::Multiplier, 1);
    return out;
}

enum class LinearSolver { Lu, Bicgstab };

struct LinearSolverOptions {
    LinearSolver solver = LinearSolver::Lu;
    double tol = 1e-10;
    int max_iter = 20000;
    Preconditioner precond = Preconditioner::Ilu0;
};

// Solves sys per the options; returns the solution and iteration count.
inline std::pair<std::vector<double>, int> solve_system(const SparseSystem& sys,
                                                        const LinearSolverOptions& opts) {
    if (opts.solver == LinearSolver::Lu) return {solve_sparse_lu(sys), 0};
    BicgstabResult r = solve_bicgstab(sys, opts.tol, opts.max_iter, opts.precond);
    if (!r.converged()) {
        const char* why = r.status == IterStatus::Breakdown ? "breakdown" : "max iterations";
        throw SolverFailure(std::string("bicgstab: ") + why + " after " +
                            std::to_string(r.iterations) + " iterations, residual " +
                            std::to_string(r.relative_residual));
    }
    return {std::move(r.x), r.iterations};
}

inline double divergence_l2(const Mesh& mesh, const DofMap& dm_v,
                            const std::vector<double>& u1, const std::vector<double>& u2) {
    static const detail::ElementTables tables(kAssemblyQuadratureDegree);
    std::array<Vec2, 6> g2;
    std::array<double, 6> lap2;
    double acc = 0.0;
    for (int cell = 0; cell < mesh.n_triangles(); ++cell) {
        const ElementGeometry geom = mesh.geometry(cell);
        const auto vdofs = dm_v.cell_dofs(cell);
        for (int q = 0; q < tables.quad.size(); ++q) {
            physical_gradients_and_laplacians(geom, tables.p2[q], g2, lap2);
            double div = 0.0;
            for (int i = 0; i < 6; ++i)
                div += u1[vdofs[i]] * g2[i][0] + u2[vdofs[i]] * g2[i][1];
            acc += tables.quad.weights[q] * geom.det * div * div;
        }
    }
    return std::sqrt(acc);
}

struct StabConstants {
    double c1 = 128.0;
    double c2 = 1.0;
};

inline FlowSolution solve_flow(const Mesh& mesh, const FlowProblem& prob, Method method,
                               const StabConstants& constants = {},
                               const LinearSolverOptions& opts = {}) {
    const DofMap dm_v = build_dof_map(mesh, 2);
    const DofMap dm_p = build_dof_map(mesh, 1);

    SparseSystem sys;
    if (method == Method::Sgs) {
        const FlowStabilization stab =
            compute_flow_taus(prob.mu, prob.sigma, mesh.h, constants.c1, constants.c2);
        sys = assemble_flow_sgs(mesh, dm_v, dm_p, prob, stab);
    } else {
        sys = assemble_flow_galerkin(mesh, dm_v, dm_p, prob);
    }
    sys = apply_velocity_dirichlet(sys, dm_v);
    sys = fix_pressure(sys, mesh, dm_p);

    auto [x, iters] = solve_system(sys, opts);

    FlowSolution sol;
    sol.iterations = iters;
    sol.u1.assign(x.begin(), x.begin() + dm_v.n_dofs);
    sol.u2.assign(x.begin() + dm_v.n_dofs, x.begin() + 2 * dm_v.n_dofs);
    sol.p.assign(x.begin() + 2 * dm_v.n_dofs, x.begin() + 2 * dm_v.n_dofs + dm_p.n_dofs);
    for (int d : dm_v.dirichlet_dofs) {
        sol.u1[d] = 0.0;
        sol.u2[d] = 0.0;
    }
    sol.div_u_l2 = divergence_l2(mesh, dm_v, sol.u1, sol.u2);
    return sol;
}

}  // namespace stabfem
