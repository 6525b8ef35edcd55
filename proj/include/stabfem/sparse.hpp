#pragma once

// Triplet accumulation, CSR conversion with duplicate summation, and a
// MatrixMarket coordinate-format dump for debugging.

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace stabfem {

struct TripletBuffer {
    std::vector<int> rows;
    std::vector<int> cols;
    std::vector<double> vals;

    void add(int r, int c, double v) {
        rows.push_back(r);
        cols.push_back(c);
        vals.push_back(v);
    }
    size_t size() const { return vals.size(); }
    void reserve(size_t n) {
        rows.reserve(n);
        cols.reserve(n);
        vals.reserve(n);
    }
};

struct CsrMatrix {
    int n = 0;
    std::vector<int> row_offsets;  // size n+1
    std::vector<int> col_indices;  // strictly increasing within each row
    std::vector<double> values;

    int nnz() const { return static_cast<int>(values.size()); }
};

inline CsrMatrix to_csr(const TripletBuffer& buf, int n) {
    if (n < 0) throw std::invalid_argument("to_csr: negative dimension");
    for (size_t k = 0; k < buf.size(); ++k)
        if (buf.rows[k] < 0 || buf.rows[k] >= n || buf.cols[k] < 0 || buf.cols[k] >= n)
            throw std::out_of_range("to_csr: triplet index out of range");

    // Counting sort by row, then per-row sort by column and merge duplicates.
    std::vector<int> count(static_cast<size_t>(n) + 1, 0);
    for (int r : buf.rows) ++count[static_cast<size_t>(r) + 1];
    std::partial_sum(count.begin(), count.end(), count.begin());

    std::vector<int> order(buf.size());
    {
        std::vector<int> cursor(count.begin(), count.end() - 1);
        for (size_t k = 0; k < buf.size(); ++k)
            order[static_cast<size_t>(cursor[buf.rows[k]]++)] = static_cast<int>(k);
    }

    CsrMatrix m;
    m.n = n;
    m.row_offsets.assign(static_cast<size_t>(n) + 1, 0);
    m.col_indices.reserve(buf.size());
    m.values.reserve(buf.size());
    std::vector<int> scratch;
    for (int r = 0; r < n; ++r) {
        scratch.assign(order.begin() + count[r], order.begin() + count[r + 1]);
        std::sort(scratch.begin(), scratch.end(),
                  [&buf](int a, int b) { return buf.cols[a] < buf.cols[b]; });
        const int row_start = static_cast<int>(m.col_indices.size());
        for (int k : scratch) {
            const int c = buf.cols[k];
            if (static_cast<int>(m.col_indices.size()) > row_start && m.col_indices.back() == c)
                m.values.back() += buf.vals[k];
            else {
                m.col_indices.push_back(c);
                m.values.push_back(buf.vals[k]);
            }
        }
        m.row_offsets[static_cast<size_t>(r) + 1] = static_cast<int>(m.col_indices.size());
    }
    return m;
}

inline std::vector<double> matvec(const CsrMatrix& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.n)
        throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> y(static_cast<size_t>(m.n), 0.0);
    for (int r = 0; r < m.n; ++r) {
        double s = 0.0;
        for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k)
            s += m.values[k] * x[m.col_indices[k]];
        y[r] = s;
    }
    return y;
}

// MatrixMarket coordinate format, 1-based indices.
inline void write_matrix_market(const CsrMatrix& m, std::ostream& os) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << m.n << " " << m.n << " " << m.nnz() << "\n";
    char line[64];
    for (int r = 0; r < m.n; ++r)
        for (int k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
            std::snprintf(line, sizeof line, "%d %d %.17g\n", r + 1, m.col_indices[k] + 1,
                          m.values[k]);
            os << line;
        }
}

}  // namespace stabfem
