#pragma once

// Reference-element machinery for P1/P2 Lagrange triangles: symmetric Gauss
// quadrature rules, basis values with first and second derivatives, and the
// affine map to physical elements.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace stabfem {

using Vec2 = std::array<double, 2>;

// Quadrature on the unit reference triangle {(x,y): x,y >= 0, x+y <= 1}.
// Weights sum to the reference area 1/2.
struct QuadratureRule {
    std::vector<Vec2> points;
    std::vector<double> weights;

    int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

// Appends the three permutations of barycentric (a,b,b); w is already scaled
// by the reference area.
inline void push_perm3(QuadratureRule& q, double a, double b, double w) {
    q.points.push_back({b, b});  // (a,b,b) -> (lambda1,lambda2)=(b,b)
    q.points.push_back({a, b});
    q.points.push_back({b, a});
    q.weights.insert(q.weights.end(), 3, w);
}

// Appends all six permutations of distinct barycentric (a,b,c).
inline void push_perm6(QuadratureRule& q, double a, double b, double c, double w) {
    q.points.push_back({b, c});
    q.points.push_back({c, b});
    q.points.push_back({a, c});
    q.points.push_back({c, a});
    q.points.push_back({a, b});
    q.points.push_back({b, a});
    q.weights.insert(q.weights.end(), 6, w);
}

}  // namespace detail

// Symmetric rules exact to the requested polynomial degree: 3-point midpoint
// rule (degree 2), 6-point (degree 4), 12-point (degree 6).
inline QuadratureRule quadrature_rule(int degree) {
    QuadratureRule q;
    switch (degree) {
        case 2:
            q.points = {{0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}};
            q.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
            break;
        case 4:
            detail::push_perm3(q, 0.108103018168070, 0.445948490915965,
                               0.223381589678011 / 2.0);
            detail::push_perm3(q, 0.816847572980459, 0.091576213509771,
                               0.109951743655322 / 2.0);
            break;
        case 6:
            detail::push_perm3(q, 0.501426509658179, 0.249286745170910,
                               0.116786275726379 / 2.0);
            detail::push_perm3(q, 0.873821971016996, 0.063089014491502,
                               0.050844906370207 / 2.0);
            detail::push_perm6(q, 0.053145049844816, 0.310352451033785,
                               0.636502499121399, 0.082851075618374 / 2.0);
            break;
        default:
            throw std::invalid_argument("quadrature_rule: unsupported degree " +
                                        std::to_string(degree));
    }
    return q;
}

// Basis values at one reference point. Local node order:
//   P1: vertices (0,0), (1,0), (0,1)
//   P2: the three vertices, then midpoints of edges (0,1), (1,2), (2,0)
// Hessians are stored as (dxx, dxy, dyy); identically zero for P1.
struct BasisValues {
    int degree = 0;
    int count = 0;
    std::array<double, 6> value{};
    std::array<Vec2, 6> grad{};
    std::array<std::array<double, 3>, 6> hess{};
};

inline BasisValues eval_basis(int degree, double x, double y) {
    if (degree != 1 && degree != 2)
        throw std::invalid_argument("eval_basis: degree must be 1 or 2");

    const double l0 = 1.0 - x - y;
    const double l1 = x;
    const double l2 = y;
    constexpr Vec2 g0{-1.0, -1.0}, g1{1.0, 0.0}, g2{0.0, 1.0};

    BasisValues b;
    b.degree = degree;
    if (degree == 1) {
        b.count = 3;
        b.value = {l0, l1, l2};
        b.grad = {g0, g1, g2};
        return b;
    }

    b.count = 6;
    const double l[3] = {l0, l1, l2};
    const Vec2 g[3] = {g0, g1, g2};
    for (int i = 0; i < 3; ++i) {
        b.value[i] = l[i] * (2.0 * l[i] - 1.0);
        b.grad[i] = {(4.0 * l[i] - 1.0) * g[i][0], (4.0 * l[i] - 1.0) * g[i][1]};
        b.hess[i] = {4.0 * g[i][0] * g[i][0], 4.0 * g[i][0] * g[i][1],
                     4.0 * g[i][1] * g[i][1]};
    }
    for (int k = 0; k < 3; ++k) {
        const int i = k, j = (k + 1) % 3;
        b.value[3 + k] = 4.0 * l[i] * l[j];
        b.grad[3 + k] = {4.0 * (l[j] * g[i][0] + l[i] * g[j][0]),
                         4.0 * (l[j] * g[i][1] + l[i] * g[j][1])};
        b.hess[3 + k] = {8.0 * g[i][0] * g[j][0],
                         4.0 * (g[i][0] * g[j][1] + g[i][1] * g[j][0]),
                         8.0 * g[i][1] * g[j][1]};
    }
    return b;
}

// Affine map x = v0 + J*xhat from the reference triangle to a physical one.
struct ElementGeometry {
    Vec2 v0{};
    double jac[2][2]{};    // columns are v1-v0, v2-v0
    double inv_t[2][2]{};  // J^{-T}
    double det = 0.0;      // det J = 2*area, positive for CCW vertices
};

inline ElementGeometry element_geometry(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
    ElementGeometry g;
    g.v0 = p0;
    g.jac[0][0] = p1[0] - p0[0];
    g.jac[1][0] = p1[1] - p0[1];
    g.jac[0][1] = p2[0] - p0[0];
    g.jac[1][1] = p2[1] - p0[1];
    g.det = g.jac[0][0] * g.jac[1][1] - g.jac[0][1] * g.jac[1][0];
    if (!(g.det > 0.0))
        throw std::invalid_argument("element_geometry: degenerate or inverted triangle");
    // inv(J) = 1/det * [j11 -j01; -j10 j00]; store its transpose
    g.inv_t[0][0] = g.jac[1][1] / g.det;
    g.inv_t[0][1] = -g.jac[1][0] / g.det;
    g.inv_t[1][0] = -g.jac[0][1] / g.det;
    g.inv_t[1][1] = g.jac[0][0] / g.det;
    return g;
}

inline Vec2 map_to_physical(const ElementGeometry& g, double xr, double yr) {
    return {g.v0[0] + g.jac[0][0] * xr + g.jac[0][1] * yr,
            g.v0[1] + g.jac[1][0] * xr + g.jac[1][1] * yr};
}

inline Vec2 physical_gradient(const ElementGeometry& g, const Vec2& ref_grad) {
    return {g.inv_t[0][0] * ref_grad[0] + g.inv_t[0][1] * ref_grad[1],
            g.inv_t[1][0] * ref_grad[0] + g.inv_t[1][1] * ref_grad[1]};
}

// Physical second derivatives: H = J^{-T} Hhat J^{-1}. Exact for affine maps.
inline std::array<double, 3> physical_hessian(const ElementGeometry& g,
                                              const std::array<double, 3>& ref_hess) {
    const double h00 = ref_hess[0], h01 = ref_hess[1], h11 = ref_hess[2];
    // T = J^{-T} * Hhat
    const double t00 = g.inv_t[0][0] * h00 + g.inv_t[0][1] * h01;
    const double t01 = g.inv_t[0][0] * h01 + g.inv_t[0][1] * h11;
    const double t10 = g.inv_t[1][0] * h00 + g.inv_t[1][1] * h01;
    const double t11 = g.inv_t[1][0] * h01 + g.inv_t[1][1] * h11;
    // H = T * J^{-1}, with J^{-1} = (J^{-T})^T
    return {t00 * g.inv_t[0][0] + t01 * g.inv_t[0][1],
            t00 * g.inv_t[1][0] + t01 * g.inv_t[1][1],
            t10 * g.inv_t[1][0] + t11 * g.inv_t[1][1]};
}

inline double physical_laplacian(const ElementGeometry& g,
                                 const std::array<double, 3>& ref_hess) {
    const auto h = physical_hessian(g, ref_hess);
    return h[0] + h[2];
}

// Gradients and Laplacians of every basis function at one point, in physical
// coordinates.
inline void physical_gradients_and_laplacians(const ElementGeometry& g,
                                              const BasisValues& b,
                                              std::array<Vec2, 6>& grads,
                                              std::array<double, 6>& laplacians) {
    for (int i = 0; i < b.count; ++i) {
        grads[i] = physical_gradient(g, b.grad[i]);
        laplacians[i] = physical_laplacian(g, b.hess[i]);
    }
}

}  // namespace stabfem
