#include "ggtpc/fedstats.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ggtpc::fedstats {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("fedstats: " + what);
}

// Flips the column so its largest-magnitude component (first such component
// on ties) is positive.
void fix_sign(Eigen::Ref<Vector> column) {
    int best = 0;
    double best_abs = std::abs(column[0]);
    for (int i = 1; i < column.size(); ++i) {
        const double a = std::abs(column[i]);
        if (a > best_abs) {
            best_abs = a;
            best = i;
        }
    }
    if (column[best] < 0.0) column = -column;
}

bool lex_less(const Vector& a, const Vector& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

} // namespace

void StatTriplet::validate() const {
    if (mean.size() != cov.rows() || cov.rows() != cov.cols()) fail("StatTriplet dimensions inconsistent");
    if (!mean.allFinite() || !cov.allFinite()) fail("StatTriplet contains non-finite entries");
    if (n == 0) {
        if (mean.cwiseAbs().maxCoeff() != 0.0 || (cov.size() > 0 && cov.cwiseAbs().maxCoeff() != 0.0)) {
            fail("StatTriplet with n == 0 must be all zeros");
        }
        return;
    }
    const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9) fail("StatTriplet covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo < -1e-8 * std::max(hi, 0.0) && lo < -1e-12) fail("StatTriplet covariance is not PSD");
}

Matrix GeometricShape::reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
}

std::map<int, StatTriplet> local_stats(const synthdata::ClientDataset& dataset) {
    std::map<int, StatTriplet> out;
    if (dataset.samples.empty()) return out;
    const int dim = dataset.dim();

    std::map<int, std::vector<const Vector*>> by_class;
    for (const auto& [v, label] : dataset.samples) {
        if (v.size() != dim) fail("local_stats: inconsistent sample dimensionality");
        by_class[label].push_back(&v);
    }

    for (const auto& [label, vs] : by_class) {
        StatTriplet t;
        t.n = static_cast<std::uint64_t>(vs.size());
        t.mean = Vector::Zero(dim);
        for (const Vector* v : vs) t.mean += *v;
        t.mean /= static_cast<double>(t.n);
        t.cov = Matrix::Zero(dim, dim);
        for (const Vector* v : vs) {
            const Vector d = *v - t.mean;
            t.cov.noalias() += d * d.transpose();
        }
        t.cov /= static_cast<double>(t.n);
        out.emplace(label, std::move(t));
    }
    return out;
}

std::vector<int> select_clients(const std::map<int, std::uint64_t>& counts,
                                const SelectionPolicy& policy) {
    if (!(policy.coverage > 0.0) || policy.coverage > 1.0) fail("select_clients: coverage must be in (0, 1]");

    std::vector<std::pair<int, std::uint64_t>> holders;
    std::uint64_t total = 0;
    for (const auto& [client, n] : counts) {
        if (n == 0) continue;
        holders.emplace_back(client, n);
        total += n;
    }
    if (total == 0) return {};

    std::sort(holders.begin(), holders.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    // Integer cumulative counts against a floating threshold: allow a hair of
    // slack so coverage * total landing epsilon above an exact integer (e.g.
    // 0.8 * 100) does not force one extra client.
    const double threshold = policy.coverage * static_cast<double>(total);
    const double slack = 1e-9 * static_cast<double>(total);
    std::vector<int> selected;
    std::uint64_t cum = 0;
    for (const auto& [client, n] : holders) {
        selected.push_back(client);
        cum += n;
        if (static_cast<double>(cum) >= threshold - slack) break;
    }
    return selected;
}

GlobalMoments reconstruct_global(const std::map<int, StatTriplet>& triplets,
                                 const std::vector<int>& selected_in) {
    if (selected_in.empty()) fail("reconstruct_global: empty selection");

    // Accumulate in client-id order so the result is bit-identical under any
    // permutation of the selection.
    std::vector<int> selected = selected_in;
    std::sort(selected.begin(), selected.end());
    if (std::adjacent_find(selected.begin(), selected.end()) != selected.end()) {
        fail("reconstruct_global: duplicate client in selection");
    }

    int dim = -1;
    std::uint64_t total = 0;
    for (int client : selected) {
        const auto it = triplets.find(client);
        if (it == triplets.end()) fail("reconstruct_global: selected client has no triplet");
        const StatTriplet& t = it->second;
        if (t.n == 0) fail("reconstruct_global: selected client has zero count");
        if (dim < 0) dim = static_cast<int>(t.mean.size());
        if (t.mean.size() != dim || t.cov.rows() != dim || t.cov.cols() != dim) {
            fail("reconstruct_global: dimension mismatch across triplets");
        }
        total += t.n;
    }

    GlobalMoments out;
    out.total_n = total;
    out.mean = Vector::Zero(dim);
    for (int client : selected) {
        const StatTriplet& t = triplets.at(client);
        out.mean += static_cast<double>(t.n) * t.mean;
    }
    out.mean /= static_cast<double>(total);

    Matrix cov = Matrix::Zero(dim, dim);
    for (int client : selected) {
        const StatTriplet& t = triplets.at(client);
        const double w = static_cast<double>(t.n);
        cov.noalias() += w * t.cov;
        const Vector d = t.mean - out.mean;
        cov.noalias() += w * (d * d.transpose());
    }
    cov /= static_cast<double>(total);
    out.cov = 0.5 * (cov + cov.transpose());
    return out;
}

GeometricShape extract_shape(const Vector& mean, const Matrix& cov,
                             std::uint64_t total_n, int class_id) {
    if (cov.rows() != cov.cols() || mean.size() != cov.rows()) fail("extract_shape: dimension mismatch");
    if (!cov.allFinite() || !mean.allFinite()) fail("extract_shape: non-finite input");
    const double asym = cov.size() > 0 ? (cov - cov.transpose()).cwiseAbs().maxCoeff() : 0.0;
    const double scale = cov.size() > 0 ? cov.cwiseAbs().maxCoeff() : 0.0;
    if (asym > 1e-9 * std::max(1.0, scale)) fail("extract_shape: covariance is not symmetric");

    const int p = static_cast<int>(cov.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
    if (es.info() != Eigen::Success) fail("extract_shape: eigendecomposition failed");

    // Solver returns ascending order; re-sort descending with sign-fixed
    // lexicographic tiebreak so equal eigenvalues order deterministically.
    std::vector<std::pair<double, Vector>> pairs;
    pairs.reserve(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        Vector u = es.eigenvectors().col(j);
        fix_sign(u);
        pairs.emplace_back(std::max(es.eigenvalues()[j], 0.0), std::move(u));
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return lex_less(a.second, b.second);
    });

    GeometricShape shape;
    shape.class_id = class_id;
    shape.mean = mean;
    shape.total_n = total_n;
    shape.eigenvalues.resize(p);
    shape.eigenvectors.resize(p, p);
    for (int j = 0; j < p; ++j) {
        shape.eigenvalues[j] = pairs[static_cast<std::size_t>(j)].first;
        shape.eigenvectors.col(j) = pairs[static_cast<std::size_t>(j)].second;
    }
    return shape;
}

} // namespace ggtpc::fedstats
