#include "ggtpc/promptmodel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ggtpc::promptmodel {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("promptmodel: " + what);
}

double population_std(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(xs.size()));
}

double cosine(const Vector& a, const Vector& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

} // namespace

void PromptTable::validate() const {
    if (!vectors.allFinite()) fail("PromptTable contains non-finite entries");
    if (!(temperature > 0.0)) fail("PromptTable.temperature must be positive");
}

void TrainConfig::validate() const {
    if (learning_rate < 0.0) fail("TrainConfig.learning_rate must be non-negative");
    if (momentum < 0.0 || momentum >= 1.0) fail("TrainConfig.momentum must be in [0, 1)");
    if (weight_decay < 0.0) fail("TrainConfig.weight_decay must be non-negative");
    if (batch_size <= 0) fail("TrainConfig.batch_size must be positive");
    if (local_steps < 0) fail("TrainConfig.local_steps must be non-negative");
}

PromptTable init_table(int num_classes, int dim, double temperature, std::uint64_t seed) {
    if (num_classes <= 0 || dim <= 0) fail("init_table: sizes must be positive");
    if (!(temperature > 0.0)) fail("init_table: temperature must be positive");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    PromptTable table;
    table.temperature = temperature;
    table.vectors.resize(num_classes, dim);
    for (int c = 0; c < num_classes; ++c) {
        for (int j = 0; j < dim; ++j) table.vectors(c, j) = 0.01 * normal(rng);
    }
    return table;
}

Vector logits(const PromptTable& table, const Vector& x) {
    if (!x.allFinite()) fail("logits: non-finite input");
    if (x.size() != table.dim()) fail("logits: input dimension mismatch");
    const int c = table.num_classes();
    Vector out(c);
    for (int i = 0; i < c; ++i) {
        out[i] = table.temperature * cosine(table.vectors.row(i).transpose(), x);
    }
    return out;
}

std::pair<double, Matrix> ce_loss_and_grad(const PromptTable& table,
                                           const std::vector<calibrate::BatchItem>& batch) {
    const int num_classes = table.num_classes();
    const int dim = table.dim();
    const int batch_n = static_cast<int>(batch.size());
    if (batch_n == 0) fail("ce_loss_and_grad: empty batch");

    // Row norms and unit rows; zero-norm rows keep zero logits and gradient.
    Vector row_norm(num_classes);
    Matrix unit_rows(num_classes, dim);
    for (int c = 0; c < num_classes; ++c) {
        const double n = table.vectors.row(c).norm();
        row_norm[c] = n;
        if (n > 0.0) {
            unit_rows.row(c) = table.vectors.row(c) / n;
        } else {
            unit_rows.row(c).setZero();
        }
    }

    Matrix unit_x(batch_n, dim);
    for (int i = 0; i < batch_n; ++i) {
        const Vector& x = batch[static_cast<std::size_t>(i)].embedding;
        if (x.size() != dim) fail("ce_loss_and_grad: batch embedding dimension mismatch");
        const int label = batch[static_cast<std::size_t>(i)].label;
        if (label < 0 || label >= num_classes) fail("ce_loss_and_grad: label out of range");
        const double n = x.norm();
        if (n > 0.0) {
            unit_x.row(i) = x.transpose() / n;
        } else {
            unit_x.row(i).setZero();
        }
    }

    // cos matrix S (C x B), logits Z = temperature * S, softmax per column.
    const Matrix s = unit_rows * unit_x.transpose();
    const Matrix z = table.temperature * s;

    double loss = 0.0;
    Matrix dz(num_classes, batch_n); // softmax - onehot, scaled by 1/B
    for (int i = 0; i < batch_n; ++i) {
        const double zmax = z.col(i).maxCoeff();
        Vector e = (z.col(i).array() - zmax).exp();
        const double denom = e.sum();
        const int label = batch[static_cast<std::size_t>(i)].label;
        loss += -(z(label, i) - zmax - std::log(denom));
        dz.col(i) = e / denom;
        dz(label, i) -= 1.0;
    }
    loss /= static_cast<double>(batch_n);
    dz /= static_cast<double>(batch_n);

    // d cos(w_c, x_i) / d w_c = (unit_x_i - s_ci * unit_w_c) / ||w_c||
    Matrix grad = dz * unit_x;                                  // sum_i dz_ci * unit_x_i
    const Vector diag = (dz.array() * s.array()).rowwise().sum(); // sum_i dz_ci * s_ci
    grad.noalias() -= diag.asDiagonal() * unit_rows;
    for (int c = 0; c < num_classes; ++c) {
        grad.row(c) *= row_norm[c] > 0.0 ? table.temperature / row_norm[c] : 0.0;
    }
    return {loss, grad};
}

PromptTable local_train(PromptTable table,
                        const synthdata::ClientDataset& client,
                        const std::map<int, fedstats::GeometricShape>& shapes,
                        const calibrate::GpclConfig& gpcl,
                        const calibrate::SamplerState& sampler,
                        const calibrate::PrototypeSet* prototypes,
                        const TrainConfig& cfg, Rng& rng) {
    table.validate();
    cfg.validate();
    if (!client.samples.empty() && client.dim() != table.dim()) {
        fail("local_train: client / table dimension mismatch");
    }

    int steps = cfg.local_steps;
    if (steps == 0) {
        const std::uint64_t n = client.total_samples();
        steps = static_cast<int>((n + static_cast<std::uint64_t>(cfg.batch_size) - 1) /
                                 static_cast<std::uint64_t>(cfg.batch_size));
        steps = std::max(steps, 1);
    }

    Matrix velocity = Matrix::Zero(table.num_classes(), table.dim());
    for (int step = 0; step < steps; ++step) {
        const auto batch =
            calibrate::draw_batch(sampler, client, prototypes, shapes, gpcl, cfg.batch_size, rng);
        const auto [loss, grad] = ce_loss_and_grad(table, batch);
        (void)loss;
        velocity = cfg.momentum * velocity + grad;
        table.vectors -= cfg.learning_rate * velocity;
        if (cfg.weight_decay > 0.0) {
            table.vectors -= (cfg.learning_rate * cfg.weight_decay) * table.vectors;
        }
    }
    return table;
}

EvalMetrics evaluate(const PromptTable& table, const synthdata::Pool& testset,
                     bool group_by_domain) {
    if (testset.empty()) fail("evaluate: empty test set");
    EvalMetrics metrics;
    std::map<int, std::pair<std::uint64_t, std::uint64_t>> domain_hits; // domain -> (hits, total)

    std::uint64_t hits = 0;
    for (const auto& s : testset) {
        const Vector z = logits(table, s.embedding);
        int best = 0;
        for (int c = 1; c < z.size(); ++c) {
            if (z[c] > z[best]) best = c; // ties keep the lower class id
        }
        const bool hit = best == s.label;
        hits += hit ? 1 : 0;
        if (group_by_domain) {
            auto& [h, t] = domain_hits[s.domain];
            h += hit ? 1 : 0;
            ++t;
        }
    }
    metrics.top1 = static_cast<double>(hits) / static_cast<double>(testset.size());

    if (group_by_domain) {
        std::vector<double> accs;
        for (const auto& [domain, ht] : domain_hits) {
            const double acc = static_cast<double>(ht.first) / static_cast<double>(ht.second);
            metrics.per_domain_accuracy[domain] = acc;
            accs.push_back(acc);
        }
        metrics.per_domain_std = population_std(accs);
    }
    return metrics;
}

std::map<int, double> center_distances(const PromptTable& table,
                                       const std::map<int, Vector>& global_means) {
    std::map<int, double> out;
    for (int c = 0; c < table.num_classes(); ++c) {
        const auto it = global_means.find(c);
        if (it == global_means.end()) fail("center_distances: missing mean for a class");
        out[c] = 1.0 - cosine(table.vectors.row(c).transpose(), it->second);
    }
    return out;
}

ProjectionReport center_distance_report(const PromptTable& table,
                                        const std::map<int, Vector>& global_means,
                                        const synthdata::Pool& testset) {
    if (testset.empty()) fail("center_distance_report: empty test set");
    const int dim = static_cast<int>(testset.front().embedding.size());
    if (dim != table.dim()) fail("center_distance_report: dimension mismatch");

    ProjectionReport report;
    report.center_distance = center_distances(table, global_means);

    // Population moments of the test embeddings drive the projection basis.
    Vector mean = Vector::Zero(dim);
    for (const auto& s : testset) mean += s.embedding;
    mean /= static_cast<double>(testset.size());
    Matrix cov = Matrix::Zero(dim, dim);
    for (const auto& s : testset) {
        const Vector d = s.embedding - mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(testset.size());

    const auto shape = fedstats::extract_shape(mean, cov, testset.size(), -1);
    report.degenerate = shape.eigenvalues[0] <= 0.0;
    const Matrix basis = shape.eigenvectors.leftCols(std::min(dim, 2));

    const auto project = [&](const Vector& v) {
        std::array<double, 2> xy{0.0, 0.0};
        if (!report.degenerate) {
            const Vector p = basis.transpose() * (v - mean);
            xy[0] = p[0];
            if (p.size() > 1) xy[1] = p[1];
        }
        return xy;
    };

    report.test_points.reserve(testset.size());
    report.test_labels.reserve(testset.size());
    for (const auto& s : testset) {
        report.test_points.push_back(project(s.embedding));
        report.test_labels.push_back(s.label);
    }
    for (int c = 0; c < table.num_classes(); ++c) {
        report.mean_points[c] = project(global_means.at(c));
        report.prompt_points[c] = project(table.vectors.row(c).transpose());
    }
    return report;
}

} // namespace ggtpc::promptmodel
