#include "ggtpc/synthdata.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ggtpc::synthdata {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("synthdata: " + what);
}

// Dir(beta) over n entries via normalized Gamma(beta, 1) draws. For very
// small beta every draw may underflow to zero; the mass then collapses onto
// one uniformly chosen entry, which is the right degenerate limit.
std::vector<double> draw_dirichlet(double beta, int n, Rng& rng) {
    std::gamma_distribution<double> gamma(beta, 1.0);
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& v : p) {
        v = gamma(rng);
        sum += v;
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        std::uniform_int_distribution<int> pick(0, n - 1);
        std::fill(p.begin(), p.end(), 0.0);
        p[static_cast<std::size_t>(pick(rng))] = 1.0;
        return p;
    }
    for (auto& v : p) v /= sum;
    return p;
}

// Largest-fractional-part rounding of proportions * total, ties broken by
// lower index. Preserves the total exactly.
std::vector<std::uint64_t> apportion(const std::vector<double>& proportions, std::uint64_t total) {
    const int n = static_cast<int>(proportions.size());
    std::vector<std::uint64_t> counts(n, 0);
    std::vector<std::pair<double, int>> fractional;
    fractional.reserve(n);
    std::uint64_t assigned = 0;
    for (int i = 0; i < n; ++i) {
        const double exact = proportions[static_cast<std::size_t>(i)] * static_cast<double>(total);
        const double floored = std::floor(exact);
        counts[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(floored);
        assigned += counts[static_cast<std::size_t>(i)];
        fractional.emplace_back(exact - floored, i);
    }
    std::sort(fractional.begin(), fractional.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::uint64_t leftover = total - assigned;
    for (std::size_t i = 0; leftover > 0 && i < fractional.size(); ++i, --leftover) {
        ++counts[static_cast<std::size_t>(fractional[i].second)];
    }
    return counts;
}

void push_sample(ClientDataset& ds, const PoolSample& s) {
    ds.samples.emplace_back(s.embedding, s.label);
    ++ds.class_counts[s.label];
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    std::memcpy(b, &v, 4);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    std::memcpy(b, &v, 8);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v;
    std::memcpy(&v, b, 4);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v;
    std::memcpy(&v, b, 8);
    return v;
}

} // namespace

const ClassDomainSpec& GlobalSpec::spec_for(int class_id, int domain_id) const {
    return class_specs.at(static_cast<std::size_t>(class_id) * static_cast<std::size_t>(num_domains) +
                          static_cast<std::size_t>(domain_id));
}

void GlobalSpec::validate() const {
    if (dim <= 0) fail("GlobalSpec.dim must be positive");
    if (num_classes <= 0) fail("GlobalSpec.num_classes must be positive");
    if (num_domains <= 0) fail("GlobalSpec.num_domains must be positive");
    if (samples_per_class_domain <= 0) fail("GlobalSpec.samples_per_class_domain must be positive");
    const std::size_t want = static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_domains);
    if (class_specs.size() != want) fail("GlobalSpec.class_specs has wrong length");
    for (const auto& cs : class_specs) {
        if (cs.mean.size() != dim) fail("class mean has wrong dimensionality");
        if (cs.factor.rows() != dim || cs.factor.cols() != dim) fail("covariance factor must be dim x dim");
        if (!cs.mean.allFinite() || !cs.factor.allFinite()) fail("class spec contains non-finite entries");
    }
}

std::uint64_t ClientDataset::total_samples() const {
    return static_cast<std::uint64_t>(samples.size());
}

std::string to_string(PartitionScheme scheme) {
    switch (scheme) {
        case PartitionScheme::dirichlet_label_skew: return "dirichlet_label_skew";
        case PartitionScheme::one_domain_one_client: return "one_domain_one_client";
        case PartitionScheme::mixed_lds: return "mixed_lds";
    }
    fail("unknown partition scheme value");
}

PartitionScheme partition_scheme_from_string(const std::string& name) {
    if (name == "dirichlet_label_skew") return PartitionScheme::dirichlet_label_skew;
    if (name == "one_domain_one_client") return PartitionScheme::one_domain_one_client;
    if (name == "mixed_lds") return PartitionScheme::mixed_lds;
    fail("unknown partition scheme '" + name + "'");
}

Pool generate_global(const GlobalSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Pool pool;
    pool.reserve(static_cast<std::size_t>(spec.num_classes) * static_cast<std::size_t>(spec.num_domains) *
                 static_cast<std::size_t>(spec.samples_per_class_domain));
    Vector z(spec.dim);
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int d = 0; d < spec.num_domains; ++d) {
            const auto& cs = spec.spec_for(c, d);
            for (int i = 0; i < spec.samples_per_class_domain; ++i) {
                for (int j = 0; j < spec.dim; ++j) z[j] = normal(rng);
                Vector v = cs.mean + cs.factor * z;
                if (spec.normalize) {
                    const double norm = v.norm();
                    if (norm > 0.0) v /= norm;
                }
                pool.push_back(PoolSample{std::move(v), c, d});
            }
        }
    }
    return pool;
}

std::vector<ClientDataset> partition(const Pool& pool, const PartitionConfig& config) {
    if (pool.empty()) fail("partition: pool is empty");
    if (config.num_clients <= 0) fail("partition: num_clients must be positive");

    int num_domains = 0;
    int num_classes = 0;
    for (const auto& s : pool) {
        num_domains = std::max(num_domains, s.domain + 1);
        num_classes = std::max(num_classes, s.label + 1);
    }

    const int k = config.num_clients;
    std::vector<ClientDataset> clients(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) clients[static_cast<std::size_t>(i)].client_id = i;

    switch (config.scheme) {
        case PartitionScheme::dirichlet_label_skew: {
            if (config.beta <= 0.0) fail("partition: beta must be positive for dirichlet_label_skew");
            if (num_domains != 1) fail("partition: dirichlet_label_skew expects a single-domain pool");
            Rng rng(config.seed);
            // Per class: shuffle that class's sample indices, then hand out
            // contiguous chunks sized by the Dirichlet proportions.
            std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
            for (std::size_t i = 0; i < pool.size(); ++i) {
                by_class[static_cast<std::size_t>(pool[i].label)].push_back(i);
            }
            for (int c = 0; c < num_classes; ++c) {
                auto& idx = by_class[static_cast<std::size_t>(c)];
                if (idx.empty()) continue;
                std::shuffle(idx.begin(), idx.end(), rng);
                const auto proportions = draw_dirichlet(config.beta, k, rng);
                const auto counts = apportion(proportions, idx.size());
                std::size_t cursor = 0;
                for (int cl = 0; cl < k; ++cl) {
                    for (std::uint64_t j = 0; j < counts[static_cast<std::size_t>(cl)]; ++j) {
                        push_sample(clients[static_cast<std::size_t>(cl)], pool[idx[cursor++]]);
                    }
                }
            }
            for (auto& cd : clients) cd.domain_id = 0;
            break;
        }
        case PartitionScheme::one_domain_one_client: {
            if (k != num_domains) fail("partition: one_domain_one_client requires num_clients == num_domains");
            for (int i = 0; i < k; ++i) clients[static_cast<std::size_t>(i)].domain_id = i;
            for (const auto& s : pool) push_sample(clients[static_cast<std::size_t>(s.domain)], s);
            break;
        }
        case PartitionScheme::mixed_lds: {
            if (config.beta <= 0.0) fail("partition: beta must be positive for mixed_lds");
            if (k != num_domains) fail("partition: mixed_lds requires num_clients == num_domains");
            Rng rng(config.seed);
            for (int i = 0; i < k; ++i) clients[static_cast<std::size_t>(i)].domain_id = i;
            // Index domain-owned samples per class, shuffle, then keep a
            // count scaled by the client's coefficient row.
            for (int cl = 0; cl < k; ++cl) {
                std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
                for (std::size_t i = 0; i < pool.size(); ++i) {
                    if (pool[i].domain == cl) by_class[static_cast<std::size_t>(pool[i].label)].push_back(i);
                }
                auto row = draw_dirichlet(config.beta, num_classes, rng);
                const double row_max = *std::max_element(row.begin(), row.end());
                for (int c = 0; c < num_classes; ++c) {
                    auto& idx = by_class[static_cast<std::size_t>(c)];
                    if (idx.empty()) continue;
                    std::shuffle(idx.begin(), idx.end(), rng);
                    std::uint64_t keep = idx.size();
                    if (row_max > 0.0) {
                        const double frac = row[static_cast<std::size_t>(c)] / row_max;
                        keep = static_cast<std::uint64_t>(
                            std::ceil(frac * static_cast<double>(idx.size())));
                        keep = std::min<std::uint64_t>(keep, idx.size());
                    }
                    for (std::uint64_t j = 0; j < keep; ++j) {
                        push_sample(clients[static_cast<std::size_t>(cl)], pool[idx[j]]);
                    }
                }
            }
            break;
        }
    }
    return clients;
}

GlobalSpec make_global_spec(const WorldRecipe& recipe) {
    if (recipe.dim <= 0 || recipe.num_classes <= 0 || recipe.num_domains <= 0 ||
        recipe.samples_per_class_domain <= 0) {
        fail("make_global_spec: sizes must be positive");
    }
    if (recipe.anisotropy < 1.0) fail("make_global_spec: anisotropy must be >= 1");
    if (recipe.cov_scale < 0.0 || recipe.mean_scale < 0.0 || recipe.domain_offset < 0.0) {
        fail("make_global_spec: scales must be non-negative");
    }

    Rng rng(recipe.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int p = recipe.dim;

    // Log-spaced eigenvalue profile from anisotropy down to 1, normalized to
    // mean 1 so cov_scale sets the average spread.
    Vector spectrum(p);
    for (int j = 0; j < p; ++j) {
        const double t = (p == 1) ? 0.0 : static_cast<double>(j) / static_cast<double>(p - 1);
        spectrum[j] = std::pow(recipe.anisotropy, 1.0 - t);
    }
    spectrum *= static_cast<double>(p) / spectrum.sum();

    GlobalSpec spec;
    spec.num_classes = recipe.num_classes;
    spec.dim = p;
    spec.num_domains = recipe.num_domains;
    spec.samples_per_class_domain = recipe.samples_per_class_domain;
    spec.seed = mix_seed(recipe.seed, 0x706f6f6cULL); // pool draw stream
    spec.normalize = recipe.normalize;
    spec.class_specs.reserve(static_cast<std::size_t>(recipe.num_classes) *
                             static_cast<std::size_t>(recipe.num_domains));

    Matrix gauss(p, p);
    for (int c = 0; c < recipe.num_classes; ++c) {
        Vector base_mean(p);
        for (int j = 0; j < p; ++j) base_mean[j] = normal(rng) * recipe.mean_scale / std::sqrt(double(p));

        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) gauss(i, j) = normal(rng);
        Eigen::HouseholderQR<Matrix> qr(gauss);
        Matrix q = qr.householderQ();
        Matrix factor = recipe.cov_scale * q * spectrum.cwiseSqrt().asDiagonal();

        for (int d = 0; d < recipe.num_domains; ++d) {
            Vector mean = base_mean;
            if (recipe.num_domains > 1 && recipe.domain_offset > 0.0) {
                for (int j = 0; j < p; ++j) {
                    mean[j] += normal(rng) * recipe.domain_offset / std::sqrt(double(p));
                }
            }
            spec.class_specs.push_back(ClassDomainSpec{std::move(mean), factor});
        }
    }
    spec.validate();
    return spec;
}

Vector true_class_mean(const GlobalSpec& spec, int class_id) {
    Vector mean = Vector::Zero(spec.dim);
    for (int d = 0; d < spec.num_domains; ++d) mean += spec.spec_for(class_id, d).mean;
    return mean / static_cast<double>(spec.num_domains);
}

Matrix true_class_covariance(const GlobalSpec& spec, int class_id, int domain_id) {
    const Matrix& f = spec.spec_for(class_id, domain_id).factor;
    return f * f.transpose();
}

void write_records(std::ostream& os, const RecordHeader& header,
                   const std::vector<EmbeddingRecord>& records) {
    os.write("GGE1", 4);
    put_u32(os, static_cast<std::uint32_t>(header.dim));
    put_u32(os, static_cast<std::uint32_t>(header.num_classes));
    put_u32(os, static_cast<std::uint32_t>(header.num_domains));
    put_u64(os, static_cast<std::uint64_t>(records.size()));
    for (const auto& r : records) {
        if (r.embedding.size() != header.dim) fail("write_records: record dim mismatch");
        put_u32(os, r.client_id);
        put_u32(os, r.domain_id);
        put_u32(os, r.label);
        os.write(reinterpret_cast<const char*>(r.embedding.data()),
                 static_cast<std::streamsize>(sizeof(double)) * header.dim);
    }
    if (!os) fail("write_records: stream failure");
}

std::vector<EmbeddingRecord> read_records(std::istream& is, RecordHeader& header) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GGE1", 4) != 0) fail("read_records: bad magic");
    header.dim = static_cast<int>(get_u32(is));
    header.num_classes = static_cast<int>(get_u32(is));
    header.num_domains = static_cast<int>(get_u32(is));
    const std::uint64_t count = get_u64(is);
    std::vector<EmbeddingRecord> records;
    records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        EmbeddingRecord r;
        r.client_id = get_u32(is);
        r.domain_id = get_u32(is);
        r.label = get_u32(is);
        r.embedding.resize(header.dim);
        is.read(reinterpret_cast<char*>(r.embedding.data()),
                static_cast<std::streamsize>(sizeof(double)) * header.dim);
        if (!is) fail("read_records: truncated stream");
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<EmbeddingRecord> pool_records(const Pool& pool) {
    std::vector<EmbeddingRecord> records;
    records.reserve(pool.size());
    for (const auto& s : pool) {
        records.push_back(EmbeddingRecord{kNoClient, static_cast<std::uint32_t>(s.domain),
                                          static_cast<std::uint32_t>(s.label), s.embedding});
    }
    return records;
}

std::vector<EmbeddingRecord> dataset_records(const std::vector<ClientDataset>& datasets) {
    std::vector<EmbeddingRecord> records;
    for (const auto& ds : datasets) {
        for (const auto& [v, label] : ds.samples) {
            records.push_back(EmbeddingRecord{static_cast<std::uint32_t>(ds.client_id),
                                              static_cast<std::uint32_t>(ds.domain_id),
                                              static_cast<std::uint32_t>(label), v});
        }
    }
    return records;
}

std::vector<std::uint8_t> serialize_datasets(const RecordHeader& header,
                                             const std::vector<ClientDataset>& datasets) {
    std::ostringstream os(std::ios::binary);
    write_records(os, header, dataset_records(datasets));
    const std::string s = os.str();
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

} // namespace ggtpc::synthdata
