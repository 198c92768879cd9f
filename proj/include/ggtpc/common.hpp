#ifndef GGTPC_COMMON_HPP
#define GGTPC_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace ggtpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// All randomness in the library flows through explicitly seeded generators.
using Rng = std::mt19937_64;

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministically derives a child seed from a base seed and a salt.
// Chain calls to mix in more than one salt, e.g. round then client id.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    return splitmix64(splitmix64(base) ^ splitmix64(~salt));
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(base, a), b);
}

// Relative Frobenius distance ||a - b||_F / ||b||_F, with an absolute
// fallback when the reference is zero.
inline double relative_frobenius_error(const Matrix& a, const Matrix& b) {
    const double ref = b.norm();
    const double err = (a - b).norm();
    return ref > 0.0 ? err / ref : err;
}

} // namespace ggtpc

#endif
