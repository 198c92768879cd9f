#include "ggtpc/calibrate.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ggtpc::calibrate {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("calibrate: " + what);
}

} // namespace

void GpclConfig::validate(int dim) const {
    if (top_k < 0 || top_k > dim) fail("GpclConfig.top_k must be in 0..dim");
    if (!(scale > 0.0)) fail("GpclConfig.scale must be positive");
}

int GpclConfig::effective_top_k(int dim) const {
    return top_k == 0 ? dim : std::min(top_k, dim);
}

void PrototypeSet::validate() const {
    for (const auto& e : entries) {
        if (e.domain_id == owner_domain) fail("PrototypeSet contains an own-domain entry");
    }
}

double SamplerState::prob_of(int class_id) const {
    const auto it = classes.find(class_id);
    return it == classes.end() ? 0.0 : it->second.prob;
}

SamplerState build_sampler(const synthdata::ClientDataset& dataset,
                           const PrototypeSet* prototypes,
                           bool inverse_frequency) {
    if (prototypes != nullptr) prototypes->validate();

    SamplerState state;
    state.inverse_frequency = inverse_frequency;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        state.classes[dataset.samples[i].second].sample_indices.push_back(i);
    }
    if (prototypes != nullptr) {
        for (std::size_t i = 0; i < prototypes->entries.size(); ++i) {
            state.classes[prototypes->entries[i].class_id].prototype_indices.push_back(i);
        }
    }
    if (state.classes.empty()) fail("build_sampler: no local samples and no prototypes");

    std::uint64_t n_max = 0;
    for (auto& [class_id, slot] : state.classes) {
        slot.merged_count = static_cast<std::uint64_t>(slot.sample_indices.size() +
                                                       slot.prototype_indices.size());
        n_max = std::max(n_max, slot.merged_count);
    }

    double weight_sum = 0.0;
    for (auto& [class_id, slot] : state.classes) {
        slot.weight = inverse_frequency
                          ? static_cast<double>(n_max) / static_cast<double>(slot.merged_count)
                          : static_cast<double>(slot.merged_count);
        weight_sum += slot.weight;
    }
    for (auto& [class_id, slot] : state.classes) slot.prob = slot.weight / weight_sum;
    return state;
}

Vector gpcl_perturb(const Vector& x, const fedstats::GeometricShape& shape,
                    const GpclConfig& config, Rng& rng) {
    if (!config.enabled) return x;
    const int dim = shape.dim();
    if (x.size() != dim) fail("gpcl_perturb: embedding / shape dimension mismatch");
    if (!shape.mean.allFinite() || !shape.eigenvalues.allFinite() || !shape.eigenvectors.allFinite()) {
        fail("gpcl_perturb: shape contains non-finite entries");
    }
    config.validate(dim);

    const int k = config.effective_top_k(dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector out = x;
    for (int m = 0; m < k; ++m) {
        const double eps = normal(rng);
        out.noalias() += (config.scale * eps * std::sqrt(shape.eigenvalues[m])) * shape.eigenvectors.col(m);
    }
    return out;
}

std::vector<BatchItem> draw_batch(const SamplerState& sampler,
                                  const synthdata::ClientDataset& dataset,
                                  const PrototypeSet* prototypes,
                                  const std::map<int, fedstats::GeometricShape>& shape_by_class,
                                  const GpclConfig& config, int batch_size, Rng& rng) {
    if (batch_size < 0) fail("draw_batch: negative batch size");
    if (sampler.classes.empty()) fail("draw_batch: empty sampler");

    // Cumulative probabilities in class-id order for the inverse-CDF draw.
    std::vector<int> class_ids;
    std::vector<double> cum;
    class_ids.reserve(sampler.classes.size());
    cum.reserve(sampler.classes.size());
    double acc = 0.0;
    for (const auto& [class_id, slot] : sampler.classes) {
        acc += slot.prob;
        class_ids.push_back(class_id);
        cum.push_back(acc);
    }

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<BatchItem> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int b = 0; b < batch_size; ++b) {
        const double u = uniform(rng) * acc;
        const std::size_t pick =
            static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        const int class_id = class_ids[std::min(pick, class_ids.size() - 1)];
        const ClassSlot& slot = sampler.classes.at(class_id);

        std::uniform_int_distribution<std::uint64_t> within(0, slot.merged_count - 1);
        const std::uint64_t j = within(rng);

        const Vector* source = nullptr;
        if (j < slot.sample_indices.size()) {
            source = &dataset.samples[slot.sample_indices[static_cast<std::size_t>(j)]].first;
        } else {
            if (prototypes == nullptr) fail("draw_batch: sampler references prototypes but none given");
            const std::size_t pi = slot.prototype_indices.at(
                static_cast<std::size_t>(j - slot.sample_indices.size()));
            source = &prototypes->entries[pi].prototype;
        }

        const auto shape_it = shape_by_class.find(class_id);
        if (shape_it != shape_by_class.end()) {
            batch.push_back(BatchItem{gpcl_perturb(*source, shape_it->second, config, rng), class_id});
        } else {
            batch.push_back(BatchItem{*source, class_id});
        }
    }
    return batch;
}

} // namespace ggtpc::calibrate
