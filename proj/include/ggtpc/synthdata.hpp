#ifndef GGTPC_SYNTHDATA_HPP
#define GGTPC_SYNTHDATA_HPP

#include "ggtpc/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ggtpc::synthdata {

/// Gaussian parameters for one (class, domain) cell. The covariance is
/// implied as factor * factor^T, so it is symmetric PSD by construction.
struct ClassDomainSpec {
    Vector mean;
    Matrix factor;
};

/// Ground-truth description of the synthetic embedding world.
struct GlobalSpec {
    int num_classes = 0;
    int dim = 0;
    int num_domains = 1;
    /// Indexed class-major: class_specs[c * num_domains + d].
    std::vector<ClassDomainSpec> class_specs;
    int samples_per_class_domain = 0;
    std::uint64_t seed = 0;
    /// Post-hoc L2 normalization of generated samples. Off by default:
    /// the covariance merge identity is exact only for raw vectors.
    bool normalize = false;

    const ClassDomainSpec& spec_for(int class_id, int domain_id) const;
    void validate() const; // throws std::invalid_argument
};

struct PoolSample {
    Vector embedding;
    int label = 0;
    int domain = 0;
};
using Pool = std::vector<PoolSample>;

struct ClientDataset {
    int client_id = 0;
    int domain_id = 0;
    std::vector<std::pair<Vector, int>> samples; // (embedding, label)
    std::map<int, std::uint64_t> class_counts;

    std::uint64_t total_samples() const;
    int dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().first.size()); }
};

enum class PartitionScheme {
    dirichlet_label_skew,
    one_domain_one_client,
    mixed_lds,
};

std::string to_string(PartitionScheme scheme);
PartitionScheme partition_scheme_from_string(const std::string& name);

struct PartitionConfig {
    PartitionScheme scheme = PartitionScheme::dirichlet_label_skew;
    double beta = 0.5; // Dirichlet concentration; used by dirichlet_label_skew and mixed_lds
    int num_clients = 1;
    std::uint64_t seed = 0;
};

/// Draws samples_per_class_domain vectors for every (class, domain) cell as
/// mean + factor * z with z standard normal. Deterministic given spec.seed.
Pool generate_global(const GlobalSpec& spec);

/// Splits a pool into client datasets.
///
/// dirichlet_label_skew: per class, a Dir(beta) proportion vector over
/// clients decides the split; integer targets use largest-fractional-part
/// rounding with lowest-client-id tiebreak; class samples are shuffled with
/// the partition seed before chunking. Single-domain pools only.
///
/// one_domain_one_client: client k receives every sample of domain k;
/// requires num_clients == num_domains.
///
/// mixed_lds: domains are assigned one per client, then each client keeps a
/// per-class subsample scaled by its Dir(beta) coefficient row (row divided
/// by its own maximum, so the argmax class keeps everything). This scheme
/// drops samples; the other two conserve the pool exactly.
std::vector<ClientDataset> partition(const Pool& pool, const PartitionConfig& config);

/// Knobs for building a GlobalSpec without enumerating every Gaussian by
/// hand. Class means are scaled standard-normal draws, covariance factors
/// combine a random rotation with a log-spaced eigenvalue profile whose
/// extremes differ by `anisotropy`, and multi-domain worlds add a random
/// per-(class, domain) mean offset of typical norm `domain_offset`.
struct WorldRecipe {
    int num_classes = 0;
    int dim = 0;
    int num_domains = 1;
    int samples_per_class_domain = 0;
    double mean_scale = 1.0;
    double cov_scale = 1.0;
    double anisotropy = 1.0;    // ratio of largest to smallest covariance eigenvalue
    double domain_offset = 0.0; // typical norm of the per-domain mean shift
    bool normalize = false;
    std::uint64_t seed = 0;
};

GlobalSpec make_global_spec(const WorldRecipe& recipe);

/// Ground-truth mean of class c pooled over all domains (equal cell sizes).
Vector true_class_mean(const GlobalSpec& spec, int class_id);
Matrix true_class_covariance(const GlobalSpec& spec, int class_id, int domain_id);

// --- Record serialization -------------------------------------------------
//
// Binary layout (little-endian):
//   magic "GGE1" | u32 dim | u32 num_classes | u32 num_domains | u64 count
//   then per record: u32 client_id | u32 domain_id | u32 label | f64[dim]
// client_id 0xFFFFFFFF marks an unassigned (pool) record. Round-trips are
// bit-exact.

struct EmbeddingRecord {
    std::uint32_t client_id = 0xffffffffu;
    std::uint32_t domain_id = 0;
    std::uint32_t label = 0;
    Vector embedding;
};

inline constexpr std::uint32_t kNoClient = 0xffffffffu;

struct RecordHeader {
    int dim = 0;
    int num_classes = 0;
    int num_domains = 0;
};

void write_records(std::ostream& os, const RecordHeader& header,
                   const std::vector<EmbeddingRecord>& records);
std::vector<EmbeddingRecord> read_records(std::istream& is, RecordHeader& header);

std::vector<EmbeddingRecord> pool_records(const Pool& pool);
std::vector<EmbeddingRecord> dataset_records(const std::vector<ClientDataset>& datasets);
std::vector<std::uint8_t> serialize_datasets(const RecordHeader& header,
                                             const std::vector<ClientDataset>& datasets);

} // namespace ggtpc::synthdata

#endif
