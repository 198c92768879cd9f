#ifndef GGTPC_PROMPTMODEL_HPP
#define GGTPC_PROMPTMODEL_HPP

#include "ggtpc/calibrate.hpp"
#include "ggtpc/common.hpp"
#include "ggtpc/fedstats.hpp"
#include "ggtpc/synthdata.hpp"

#include <array>
#include <map>
#include <vector>

namespace ggtpc::promptmodel {

/// One learnable prompt vector per class, classified by temperature-scaled
/// cosine similarity.
struct PromptTable {
    Matrix vectors; // num_classes x dim, row c is class c's prompt
    double temperature = 30.0;

    int num_classes() const { return static_cast<int>(vectors.rows()); }
    int dim() const { return static_cast<int>(vectors.cols()); }
    void validate() const;
};

struct TrainConfig {
    double learning_rate = 0.002;
    double momentum = 0.9;
    double weight_decay = 1e-5;
    int batch_size = 32;
    int local_steps = 0; // 0 = one epoch equivalent, ceil(local samples / batch_size)

    void validate() const;
};

/// Per-row standard normal entries scaled by 0.01.
PromptTable init_table(int num_classes, int dim, double temperature, std::uint64_t seed);

/// logit_c = temperature * cos(row_c, x); zero-norm rows or inputs give 0.
Vector logits(const PromptTable& table, const Vector& x);

/// Mean cross-entropy over cosine logits for a batch, with the analytic
/// gradient w.r.t. the prompt matrix. Weight decay is not part of this loss
/// (it is applied decoupled in the optimizer step).
std::pair<double, Matrix> ce_loss_and_grad(const PromptTable& table,
                                           const std::vector<calibrate::BatchItem>& batch);

/// SGD-with-momentum local training: local_steps steps, each on a batch from
/// calibrate::draw_batch, with decoupled L2 weight decay on the prompt rows.
PromptTable local_train(PromptTable table,
                        const synthdata::ClientDataset& client,
                        const std::map<int, fedstats::GeometricShape>& shapes,
                        const calibrate::GpclConfig& gpcl,
                        const calibrate::SamplerState& sampler,
                        const calibrate::PrototypeSet* prototypes,
                        const TrainConfig& cfg, Rng& rng);

struct EvalMetrics {
    double top1 = 0.0;
    std::map<int, double> per_domain_accuracy;
    double per_domain_std = 0.0; // population std over per-domain accuracies
};

/// Top-1 accuracy with argmax ties broken by the lowest class id.
EvalMetrics evaluate(const PromptTable& table, const synthdata::Pool& testset,
                     bool group_by_domain);

/// 1 - cos(row_c, mean_c) per class.
std::map<int, double> center_distances(const PromptTable& table,
                                       const std::map<int, Vector>& global_means);

struct ProjectionReport {
    std::map<int, double> center_distance;
    std::vector<std::array<double, 2>> test_points; // aligned with test_labels
    std::vector<int> test_labels;
    std::map<int, std::array<double, 2>> mean_points;
    std::map<int, std::array<double, 2>> prompt_points;
    bool degenerate = false; // covariance had no spread; coordinates are zero
};

/// Projects test embeddings, global means, and prompt rows onto the top two
/// eigenvectors of the test-embedding covariance (centered at the test
/// mean), and reports per-class prompt-to-center cosine distances.
ProjectionReport center_distance_report(const PromptTable& table,
                                        const std::map<int, Vector>& global_means,
                                        const synthdata::Pool& testset);

} // namespace ggtpc::promptmodel

#endif
