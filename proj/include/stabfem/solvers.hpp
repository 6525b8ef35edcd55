#pragma once

// Linear solution for the assembled systems: direct sparse LU for table-grade
// accuracy, and preconditioned BiCGSTAB as the scalable alternative.

#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>

#include "stabfem/sparse.hpp"

namespace stabfem {

enum class DofBlock { U1, U2, Pressure, Scalar, Multiplier };

inline const char* to_string(DofBlock b) {
    switch (b) {
        case DofBlock::U1: return "u1";
        case DofBlock::U2: return "u2";
        case DofBlock::Pressure: return "p";
        case DofBlock::Scalar: return "c";
        case DofBlock::Multiplier: return "lambda";
    }
    return "?";
}

struct SparseSystem {
    CsrMatrix matrix;
    std::vector<double> rhs;
    std::vector<std::pair<DofBlock, int>> blocks;  // label -> size, in layout order

    int dimension() const { return matrix.n; }

    void check_consistent() const {
        int total = 0;
        for (const auto& [label, size] : blocks) total += size;
        if (matrix.n != static_cast<int>(rhs.size()) || matrix.n != total)
            throw std::logic_error("SparseSystem: block sizes, matrix and rhs disagree");
    }
};

struct SingularMatrixError : std::runtime_error {
    int pivot_index;
    SingularMatrixError(int pivot, const std::string& what)
        : std::runtime_error(what), pivot_index(pivot) {}
};

struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double relative_residual(const CsrMatrix& m, std::span<const double> x,
                                std::span<const double> b) {
    const auto ax = matvec(m, x);
    double r = 0.0;
    for (size_t i = 0; i < ax.size(); ++i) r += (ax[i] - b[i]) * (ax[i] - b[i]);
    return std::sqrt(r) / std::max(1.0, norm2(b));
}

namespace detail {

inline int parse_pivot_index(const std::string& message) {
    // Eigen's SparseLU reports the failing column in its message.
    for (size_t i = 0; i < message.size(); ++i)
        if (std::isdigit(static_cast<unsigned char>(message[i])))
            return std::stoi(message.substr(i));
    return -1;
}

}  // namespace detail

// Direct solve: UMFPACK's multifrontal LU with partial pivoting on a
// fill-reducing ordering. A failed factorization is rerun through Eigen's
// SparseLU, whose error message names the offending pivot column. The
// residual is verified after the back-substitution.
inline std::vector<double> solve_sparse_lu(const SparseSystem& sys) {
    sys.check_consistent();
    const CsrMatrix& m = sys.matrix;

    Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>> mapped(
        m.n, m.n, m.nnz(), m.row_offsets.data(), m.col_indices.data(), m.values.data());
    Eigen::SparseMatrix<double> a = mapped;

    Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu(a);
    if (lu.info() != Eigen::Success) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> diag;
        diag.analyzePattern(a);
        diag.factorize(a);
        const std::string what =
            diag.info() != Eigen::Success ? diag.lastErrorMessage() : "numerically singular";
        throw SingularMatrixError(detail::parse_pivot_index(what), "solve_sparse_lu: " + what);
    }

    Eigen::Map<const Eigen::VectorXd> b(sys.rhs.data(), m.n);
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success)
        throw SolverFailure("solve_sparse_lu: back-substitution failed");

    std::vector<double> out(x.data(), x.data() + m.n);
    const double res = relative_residual(m, out, sys.rhs);
    if (!(res <= 1e-10))
        throw SolverFailure("solve_sparse_lu: residual " + std::to_string(res) +
                            " exceeds 1e-10");
    return out;
}

enum class Preconditioner { None, Jacobi, Ilu0 };
enum class IterStatus { Converged, MaxIterations, Breakdown };

struct BicgstabResult {
    std::vector<double> x;
    IterStatus status = IterStatus::Converged;
    int iterations = 0;
    double relative_residual = 0.0;

    bool converged() const { return status == IterStatus::Converged; }
};

namespace detail {

// Zero-fill ILU factorization stored in the sparsity pattern of A. L has unit
// diagonal; U's diagonal sits at diag[r].
struct Ilu0 {
    const CsrMatrix* a = nullptr;
    std::vector<double> lu;
    std::vector<int> diag;

    explicit Ilu0(const CsrMatrix& m) : a(&m), lu(m.values), diag(m.n, -1) {
        for (int r = 0; r < m.n; ++r)
            for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k)
                if (m.col_indices[k] == r) diag[r] = k;
        for (int r = 0; r < m.n; ++r)
            if (diag[r] < 0)
                throw SolverFailure("ilu0: structurally missing diagonal at row " +
                                    std::to_string(r));

        for (int i = 0; i < m.n; ++i) {
            for (int kk = m.row_offsets[i]; kk < m.row_offsets[i + 1]; ++kk) {
                const int k = m.col_indices[kk];
                if (k >= i) break;
                const double piv = lu[diag[k]];
                if (std::abs(piv) < std::numeric_limits<double>::min())
                    throw SolverFailure("ilu0: zero pivot at row " + std::to_string(k));
                const double lik = lu[kk] / piv;
                lu[kk] = lik;
                // subtract lik * row k (columns > k) wherever row i has the entry
                int p = kk + 1;
                for (int q = diag[k] + 1; q < m.row_offsets[k + 1]; ++q) {
                    const int col = m.col_indices[q];
                    while (p < m.row_offsets[i + 1] && m.col_indices[p] < col) ++p;
                    if (p >= m.row_offsets[i + 1]) break;
                    if (m.col_indices[p] == col) lu[p] -= lik * lu[q];
                }
            }
        }
    }

    void apply(std::span<const double> r, std::vector<double>& z) const {
        const CsrMatrix& m = *a;
        z.assign(r.begin(), r.end());
        for (int i = 0; i < m.n; ++i) {
            double s = z[i];
            for (int k = m.row_offsets[i]; m.col_indices[k] < i; ++k)
                s -= lu[k] * z[m.col_indices[k]];
            z[i] = s;
        }
        for (int i = m.n - 1; i >= 0; --i) {
            double s = z[i];
            for (int k = diag[i] + 1; k < m.row_offsets[i + 1]; ++k)
                s -= lu[k] * z[m.col_indices[k]];
            z[i] = s / lu[diag[i]];
        }
    }
};

}  // namespace detail

inline BicgstabResult solve_bicgstab(const SparseSystem& sys, double tol, int max_iter,
                                     Preconditioner precond = Preconditioner::Ilu0) {
    if (!(tol > 0.0)) throw std::invalid_argument("solve_bicgstab: tol must be positive");
    sys.check_consistent();
    const CsrMatrix& m = sys.matrix;
    const std::vector<double>& b = sys.rhs;
    const int n = m.n;

    std::vector<double> jacobi_inv;
    std::unique_ptr<detail::Ilu0> ilu;
    if (precond == Preconditioner::Jacobi) {
        jacobi_inv.assign(n, 1.0);
        for (int r = 0; r < n; ++r)
            for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k)
                if (m.col_indices[k] == r && std::abs(m.values[k]) > 0.0)
                    jacobi_inv[r] = 1.0 / m.values[k];
    } else if (precond == Preconditioner::Ilu0) {
        ilu = std::make_unique<detail::Ilu0>(m);
    }
    std::vector<double> z(n);
    auto apply_precond = [&](std::span<const double> v, std::vector<double>& out) {
        switch (precond) {
            case Preconditioner::None: out.assign(v.begin(), v.end()); break;
            case Preconditioner::Jacobi:
                out.resize(v.size());
                for (int i = 0; i < n; ++i) out[i] = jacobi_inv[i] * v[i];
                break;
            case Preconditioner::Ilu0: ilu->apply(v, out); break;
        }
    };

    BicgstabResult res;
    res.x.assign(n, 0.0);
    const double bnorm = std::max(1.0, norm2(b));

    std::vector<double> r = b;  // r = b - A*0
    std::vector<double> rhat = r;
    std::vector<double> p(n, 0.0), v(n, 0.0), phat(n), shat(n), s(n), t(n);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double rnorm = norm2(r);
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual <= tol) return res;

    const double breakdown_eps = std::numeric_limits<double>::epsilon() *
                                 std::numeric_limits<double>::epsilon();
    for (int it = 1; it <= max_iter; ++it) {
        const double rho_new = dot(rhat, r);
        if (std::abs(rho_new) < breakdown_eps * bnorm * bnorm) {
            res.status = IterStatus::Breakdown;
            res.iterations = it - 1;
            return res;
        }
        if (it == 1) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho_new;

        apply_precond(p, phat);
        v = matvec(m, phat);
        const double rhat_v = dot(rhat, v);
        if (std::abs(rhat_v) < breakdown_eps * bnorm * bnorm) {
            res.status = IterStatus::Breakdown;
            res.iterations = it;
            return res;
        }
        alpha = rho / rhat_v;

        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) / bnorm <= tol) {
            for (int i = 0; i < n; ++i) res.x[i] += alpha * phat[i];
            res.iterations = it;
            res.relative_residual = relative_residual(m, res.x, b);
            return res;
        }

        apply_precond(s, shat);
        t = matvec(m, shat);
        const double tt = dot(t, t);
        if (tt < breakdown_eps * bnorm * bnorm) {
            res.status = IterStatus::Breakdown;
            res.iterations = it;
            return res;
        }
        omega = dot(t, s) / tt;

        for (int i = 0; i < n; ++i) {
            res.x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        res.iterations = it;
        res.relative_residual = norm2(r) / bnorm;
        if (res.relative_residual <= tol) return res;
        if (std::abs(omega) < breakdown_eps) {
            res.status = IterStatus::Breakdown;
            return res;
        }
    }
    res.status = IterStatus::MaxIterations;
    return res;
}

}  // namespace stabfem
