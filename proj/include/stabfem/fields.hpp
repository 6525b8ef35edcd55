#pragma once

// Closed-form coefficient and solution fields. Assembly and error norms only
// ever sample values and first derivatives; the strong-form residuals also
// need the diffusion coefficients' gradients, which callers supply
// analytically.

#include <array>
#include <functional>

namespace stabfem {

using ScalarFn = std::function<double(double, double)>;

// Scalar field with analytic first derivatives.
struct ScalarField {
    ScalarFn value;
    ScalarFn dx;
    ScalarFn dy;

    static ScalarField constant(double v) {
        return {[v](double, double) { return v; }, [](double, double) { return 0.0; },
                [](double, double) { return 0.0; }};
    }
};

struct VectorFn {
    ScalarFn x;
    ScalarFn y;

    std::array<double, 2> operator()(double px, double py) const {
        return {x(px, py), y(px, py)};
    }
};

}  // namespace stabfem
