#ifndef GGTPC_TEST_SUPPORT_HPP
#define GGTPC_TEST_SUPPORT_HPP

#include "ggtpc/common.hpp"
#include "ggtpc/synthdata.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace ggtpc::testsupport {

inline bool bit_equal(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) {
            return false;
        }
    }
    return true;
}

inline bool bit_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        return false;
    }
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            if (a(i, j) != b(i, j)) {
                return false;
            }
        }
    }
    return true;
}

inline Vector random_vector(int dim, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    for (int i = 0; i < dim; ++i) {
        v[i] = scale * normal(rng);
    }
    return v;
}

inline Matrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = scale * normal(rng);
        }
    }
    return m;
}

/// Random PSD matrix A A^T / dim (full rank with probability 1).
inline Matrix random_psd(int dim, Rng& rng, double scale = 1.0) {
    const Matrix a = random_matrix(dim, dim, rng, scale);
    return (a * a.transpose()) / static_cast<double>(dim);
}

struct Pooled {
    Vector mean;
    Matrix cov; // population normalization (divide by n)
    std::uint64_t n = 0;
};

/// Direct two-pass population statistics — the brute-force oracle the
/// distributed reconstruction is checked against.
inline Pooled pooled_population_stats(const std::vector<Vector>& xs) {
    Pooled out;
    out.n = xs.size();
    const int dim = static_cast<int>(xs.front().size());
    out.mean = Vector::Zero(dim);
    for (const Vector& x : xs) {
        out.mean += x;
    }
    out.mean /= static_cast<double>(out.n);
    out.cov = Matrix::Zero(dim, dim);
    for (const Vector& x : xs) {
        const Vector d = x - out.mean;
        out.cov += d * d.transpose();
    }
    out.cov /= static_cast<double>(out.n);
    return out;
}

/// Client dataset from labeled samples, with class_counts kept consistent.
inline synthdata::ClientDataset make_dataset(int client_id,
                                             std::vector<std::pair<Vector, int>> samples) {
    synthdata::ClientDataset ds;
    ds.client_id = client_id;
    ds.samples = std::move(samples);
    for (const auto& [v, label] : ds.samples) {
        ++ds.class_counts[label];
    }
    return ds;
}

} // namespace ggtpc::testsupport

#endif
