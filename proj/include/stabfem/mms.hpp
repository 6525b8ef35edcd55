#pragma once

// Manufactured solutions for convergence verification. The velocity is the
// curl of the stream function psi = sin^2(pi x) sin^2(pi y), so it is exactly
// divergence-free with zero boundary trace; pressure and concentration are
// zero-mean / zero-trace sine products. Forcings are derived by applying the
// strong operators analytically.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "stabfem/adr.hpp"
#include "stabfem/fields.hpp"
#include "stabfem/mesh.hpp"
#include "stabfem/stokes_darcy.hpp"

namespace stabfem {

// Exact scalar solution with the first derivatives needed by the H1 norm.
struct AnalyticScalar {
    ScalarFn value;
    ScalarFn dx;
    ScalarFn dy;
};

struct ManufacturedCase {
    std::string name;
    AnalyticScalar u1, u2;  // divergence-free, zero trace
    AnalyticScalar p;       // zero mean
    AnalyticScalar c;       // zero trace
    double mu = 1.0, sigma = 1.0, alpha = 1.0;
    ScalarField D1, D2;
    VectorFn f;  // -mu Lap u + sigma u + grad p
    ScalarFn g;  // strong ADR operator applied to c, advected by the exact u

    FlowProblem flow_problem() const { return {mu, sigma, f}; }
    TransportProblem transport_problem() const { return {D1, D2, alpha, g}; }
};

namespace detail {

inline ManufacturedCase make_case(std::string name, double mu, double sigma, double alpha,
                                  ScalarField d1, ScalarField d2) {
    using std::cos;
    using std::sin;
    constexpr double pi = std::numbers::pi;

    ManufacturedCase mc;
    mc.name = std::move(name);
    mc.mu = mu;
    mc.sigma = sigma;
    mc.alpha = alpha;
    mc.D1 = d1;
    mc.D2 = d2;

    // u = (psi_y, -psi_x), psi = sin^2(pi x) sin^2(pi y)
    mc.u1 = {
        [](double x, double y) { return pi * sin(pi * x) * sin(pi * x) * sin(2 * pi * y); },
        [](double x, double y) { return pi * pi * sin(2 * pi * x) * sin(2 * pi * y); },
        [](double x, double y) {
            return 2 * pi * pi * sin(pi * x) * sin(pi * x) * cos(2 * pi * y);
        }};
    mc.u2 = {
        [](double x, double y) { return -pi * sin(2 * pi * x) * sin(pi * y) * sin(pi * y); },
        [](double x, double y) {
            return -2 * pi * pi * cos(2 * pi * x) * sin(pi * y) * sin(pi * y);
        },
        [](double x, double y) { return -pi * pi * sin(2 * pi * x) * sin(2 * pi * y); }};
    mc.p = {[](double x, double y) { return sin(2 * pi * x) * sin(2 * pi * y); },
            [](double x, double y) { return 2 * pi * cos(2 * pi * x) * sin(2 * pi * y); },
            [](double x, double y) { return 2 * pi * sin(2 * pi * x) * cos(2 * pi * y); }};
    mc.c = {[](double x, double y) { return sin(pi * x) * sin(pi * y); },
            [](double x, double y) { return pi * cos(pi * x) * sin(pi * y); },
            [](double x, double y) { return pi * sin(pi * x) * cos(pi * y); }};

    auto lap_u1 = [](double x, double y) {
        return 2 * pi * pi * pi * (cos(2 * pi * x) - 2 * sin(pi * x) * sin(pi * x)) *
               sin(2 * pi * y);
    };
    auto lap_u2 = [](double x, double y) {
        return 2 * pi * pi * pi * sin(2 * pi * x) *
               (2 * sin(pi * y) * sin(pi * y) - cos(2 * pi * y));
    };
    mc.f = {[mu, sigma, lap_u1, u1 = mc.u1, px = mc.p.dx](double x, double y) {
                return -mu * lap_u1(x, y) + sigma * u1.value(x, y) + px(x, y);
            },
            [mu, sigma, lap_u2, u2 = mc.u2, py = mc.p.dy](double x, double y) {
                return -mu * lap_u2(x, y) + sigma * u2.value(x, y) + py(x, y);
            }};

    auto c_xx = [](double x, double y) { return -pi * pi * sin(pi * x) * sin(pi * y); };
    auto c_yy = c_xx;
    mc.g = [d1, d2, alpha, c = mc.c, c_xx, c_yy, u1 = mc.u1, u2 = mc.u2](double x, double y) {
        const double diff = d1.value(x, y) * c_xx(x, y) + d1.dx(x, y) * c.dx(x, y) +
                            d2.value(x, y) * c_yy(x, y) + d2.dy(x, y) * c.dy(x, y);
        return -diff + u1.value(x, y) * c.dx(x, y) + u2.value(x, y) * c.dy(x, y) +
               alpha * c.value(x, y);
    };
    return mc;
}

// D(x) = s * (1 + 0.02 t)^2 along the given axis, as in the transport test
// coefficients.
inline ScalarField quadratic_ramp_x(double s) {
    return {[s](double x, double) { return s * (1 + 0.02 * x) * (1 + 0.02 * x); },
            [s](double x, double) { return 0.04 * s * (1 + 0.02 * x); },
            [](double, double) { return 0.0; }};
}

inline ScalarField quadratic_ramp_y(double s) {
    return {[s](double, double y) { return s * (1 + 0.02 * y) * (1 + 0.02 * y); },
            [](double, double) { return 0.0; },
            [s](double, double y) { return 0.04 * s * (1 + 0.02 * y); }};
}

}  // namespace detail

// The three verification cases: a smooth reference, the small-diffusion
// regime, and the diffusion-dominated regime.
inline std::vector<ManufacturedCase> default_cases() {
    std::vector<ManufacturedCase> cases;
    cases.push_back(detail::make_case("smooth", 1.0, 1.0, 1.0, ScalarField::constant(1.0),
                                      ScalarField::constant(1.0)));
    cases.push_back(detail::make_case("small-diffusion", 1.0, 1.0, 10.0,
                                      detail::quadratic_ramp_x(1e-7),
                                      detail::quadratic_ramp_y(1e-8)));
    cases.push_back(detail::make_case("diffusion-dominated", 1.0, 1.0, 0.001,
                                      detail::quadratic_ramp_x(1.0),
                                      detail::quadratic_ramp_y(0.1)));
    return cases;
}

inline const ManufacturedCase& find_case(const std::vector<ManufacturedCase>& cases,
                                         const std::string& name) {
    for (const auto& c : cases)
        if (c.name == name) return c;
    throw std::invalid_argument("unknown case '" + name + "'");
}

namespace detail {

template <bool WithGradient>
inline double error_norm(const std::vector<double>& dofs, const AnalyticScalar& exact,
                         const Mesh& mesh, const DofMap& dm) {
    if (static_cast<int>(dofs.size()) != dm.n_dofs)
        throw std::invalid_argument("error_norm: DOF vector does not match the map");
    static const ElementTables tables(kAssemblyQuadratureDegree);
    const int nb = dm.dofs_per_cell();
    double acc = 0.0;
    for (int cell = 0; cell < mesh.n_triangles(); ++cell) {
        const ElementGeometry geom = mesh.geometry(cell);
        const auto cd = dm.cell_dofs(cell);
        for (int q = 0; q < tables.quad.size(); ++q) {
            const BasisValues& b = dm.degree == 2 ? tables.p2[q] : tables.p1[q];
            const double w = tables.quad.weights[q] * geom.det;
            const Vec2 xq =
                map_to_physical(geom, tables.quad.points[q][0], tables.quad.points[q][1]);
            double vh = 0.0, gx = 0.0, gy = 0.0;
            for (int i = 0; i < nb; ++i) {
                vh += dofs[cd[i]] * b.value[i];
                if constexpr (WithGradient) {
                    const Vec2 g = physical_gradient(geom, b.grad[i]);
                    gx += dofs[cd[i]] * g[0];
                    gy += dofs[cd[i]] * g[1];
                }
            }
            const double dv = vh - exact.value(xq[0], xq[1]);
            acc += w * dv * dv;
            if constexpr (WithGradient) {
                const double dgx = gx - exact.dx(xq[0], xq[1]);
                const double dgy = gy - exact.dy(xq[0], xq[1]);
                acc += w * (dgx * dgx + dgy * dgy);
            }
        }
    }
    return std::sqrt(acc);
}

}  // namespace detail

inline double l2_error(const std::vector<double>& dofs, const AnalyticScalar& exact,
                       const Mesh& mesh, const DofMap& dm) {
    return detail::error_norm<false>(dofs, exact, mesh, dm);
}

// Full H1 norm: (L2^2 + |.|_{H1}^2)^{1/2}.
inline double h1_error(const std::vector<double>& dofs, const AnalyticScalar& exact,
                       const Mesh& mesh, const DofMap& dm) {
    return detail::error_norm<true>(dofs, exact, mesh, dm);
}

// Observed convergence order between two meshes refined by a factor of two.
inline double observed_order(double e_coarse, double e_fine) {
    if (!(e_coarse > 0.0) || !(e_fine > 0.0))
        throw std::invalid_argument("observed_order: errors must be positive");
    return std::log2(e_coarse / e_fine);
}

// Nodal interpolant of an analytic field in the given space.
inline std::vector<double> interpolate(const AnalyticScalar& f, const Mesh& mesh,
                                       const DofMap& dm) {
    const auto coords = dof_coordinates(mesh, dm);
    std::vector<double> out(coords.size());
    for (size_t i = 0; i < coords.size(); ++i) out[i] = f.value(coords[i][0], coords[i][1]);
    return out;
}

}  // namespace stabfem
