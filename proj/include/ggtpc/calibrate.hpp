#ifndef GGTPC_CALIBRATE_HPP
#define GGTPC_CALIBRATE_HPP

#include "ggtpc/common.hpp"
#include "ggtpc/fedstats.hpp"
#include "ggtpc/synthdata.hpp"

#include <map>
#include <optional>
#include <vector>

namespace ggtpc::calibrate {

/// Geometry-guided perturbation knobs. top_k == 0 means "all eigenpairs";
/// scale 1.0 is the faithful default.
struct GpclConfig {
    bool enabled = true;
    int top_k = 0;      // 0 = use every eigenpair; otherwise 1..dim
    double scale = 1.0; // multiplier on the perturbation

    void validate(int dim) const;
    int effective_top_k(int dim) const;
};

struct PrototypeEntry {
    int class_id = 0;
    int domain_id = 0;
    Vector prototype;
};

/// Out-of-domain class prototypes delivered to one client.
struct PrototypeSet {
    int owner_domain = -1;
    std::vector<PrototypeEntry> entries;

    void validate() const; // no entry may carry the owner's domain
};

/// Inverse-frequency sampling state over a client's classes. Prototypes
/// merge into their class's count as one sample each before weighting, so a
/// class present only through a prototype gets count 1 and weight n_max.
struct ClassSlot {
    std::vector<std::size_t> sample_indices;    // into dataset.samples
    std::vector<std::size_t> prototype_indices; // into prototypes.entries
    std::uint64_t merged_count = 0;
    double weight = 0.0;
    double prob = 0.0;
};

struct SamplerState {
    std::map<int, ClassSlot> classes;
    bool inverse_frequency = true;

    double prob_of(int class_id) const;
};

/// Builds the sampler from a dataset's class counts and optional prototypes.
/// With inverse_frequency false the class probabilities are proportional to
/// merged counts instead (plain uniform-over-samples draw), which is the
/// sampler-off ablation.
SamplerState build_sampler(const synthdata::ClientDataset& dataset,
                           const PrototypeSet* prototypes,
                           bool inverse_frequency = true);

/// x + scale * sum_{m=1..top_k} eps_m sqrt(lambda_m) u_m with eps_m drawn
/// standard normal from rng. Disabled configs return x untouched and do not
/// consume any rng draws.
Vector gpcl_perturb(const Vector& x, const fedstats::GeometricShape& shape,
                    const GpclConfig& config, Rng& rng);

struct BatchItem {
    Vector embedding;
    int label = 0;
};

/// Draws batch_size items: class by sampler probability, then a uniform pick
/// among that class's merged pool (local samples plus prototypes), then the
/// class-shape perturbation. Classes without a shape pass through unchanged.
///
/// Draw protocol per item, in order: one uniform double in [0,1) for the
/// class, one uniform integer for the within-class pick, then (only when
/// perturbation applies) top_k standard normals.
std::vector<BatchItem> draw_batch(const SamplerState& sampler,
                                  const synthdata::ClientDataset& dataset,
                                  const PrototypeSet* prototypes,
                                  const std::map<int, fedstats::GeometricShape>& shape_by_class,
                                  const GpclConfig& config, int batch_size, Rng& rng);

} // namespace ggtpc::calibrate

#endif
