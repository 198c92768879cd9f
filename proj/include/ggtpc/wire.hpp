#ifndef GGTPC_WIRE_HPP
#define GGTPC_WIRE_HPP

#include "ggtpc/common.hpp"
#include "ggtpc/fedstats.hpp"

#include <cstdint>
#include <vector>

namespace ggtpc::calibrate {
struct PrototypeSet; // defined in calibrate.hpp
}

namespace ggtpc::promptmodel {
struct PromptTable; // defined in promptmodel.hpp
}

namespace ggtpc::wire {

// Little-endian binary payload codecs for everything that crosses the
// simulated client/server boundary. Each payload starts with a one-byte
// format tag (currently 1). Covariances travel as the upper triangle only,
// row-major; decoding re-symmetrizes.
//
//   triplet:   tag | u32 class_id | u64 n | f64 mean[d] | f64 upper[d(d+1)/2]
//   shape:     tag | u32 class_id | u64 total_n | f64 mean[d]
//              | f64 eigenvalues[d] | f64 eigenvectors[d*d] column-major
//   prototypes:tag | u32 owner_domain | u32 count
//              | per entry: u32 class_id | u32 domain_id | f64[d]
//   table:     tag | u32 num_classes | u32 dim | f64 temperature
//              | f64 vectors row-major

inline constexpr std::uint8_t kFormatTag = 1;

using Bytes = std::vector<std::uint8_t>;

Bytes encode_triplet(int class_id, const fedstats::StatTriplet& triplet);
std::pair<int, fedstats::StatTriplet> decode_triplet(const Bytes& payload, int dim);

Bytes encode_shape(const fedstats::GeometricShape& shape);
fedstats::GeometricShape decode_shape(const Bytes& payload, int dim);

Bytes encode_prototypes(const calibrate::PrototypeSet& prototypes, int dim);
calibrate::PrototypeSet decode_prototypes(const Bytes& payload, int dim);

Bytes encode_prompt_table(const promptmodel::PromptTable& table);
promptmodel::PromptTable decode_prompt_table(const Bytes& payload);

} // namespace ggtpc::wire

#endif
