#pragma once

// Shared test utilities: dense reference constructions kept independent of
// the CSR/solver code paths they check.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "stabfem/sparse.hpp"

namespace test_support {

using DenseMatrix = std::vector<std::vector<double>>;

inline DenseMatrix dense_from_triplets(const stabfem::TripletBuffer& buf, int n) {
    DenseMatrix m(n, std::vector<double>(n, 0.0));
    for (size_t k = 0; k < buf.size(); ++k) m[buf.rows[k]][buf.cols[k]] += buf.vals[k];
    return m;
}

inline DenseMatrix dense_from_csr(const stabfem::CsrMatrix& a) {
    DenseMatrix m(a.n, std::vector<double>(a.n, 0.0));
    for (int r = 0; r < a.n; ++r)
        for (int k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
            m[r][a.col_indices[k]] += a.values[k];
    return m;
}

inline std::vector<double> dense_matvec(const DenseMatrix& m, const std::vector<double>& x) {
    std::vector<double> y(m.size(), 0.0);
    for (size_t i = 0; i < m.size(); ++i)
        for (size_t j = 0; j < m.size(); ++j) y[i] += m[i][j] * x[j];
    return y;
}

// Dense LU with partial pivoting; the oracle for the sparse solvers.
inline std::vector<double> dense_lu_solve(DenseMatrix a, std::vector<double> b) {
    const int n = static_cast<int>(a.size());
    std::vector<int> piv(n);
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
        if (a[p][k] == 0.0) throw std::runtime_error("dense_lu_solve: singular matrix");
        std::swap(a[k], a[p]);
        std::swap(b[k], b[p]);
        for (int i = k + 1; i < n; ++i) {
            const double f = a[i][k] / a[k][k];
            a[i][k] = f;
            for (int j = k + 1; j < n; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) b[i] -= a[i][j] * b[j];
        b[i] /= a[i][i];
    }
    return b;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// Triangle area by the shoelace formula.
inline double shoelace_area(const std::array<double, 2>& a, const std::array<double, 2>& b,
                            const std::array<double, 2>& c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

}  // namespace test_support
