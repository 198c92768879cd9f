#ifndef GGTPC_FEDSTATS_HPP
#define GGTPC_FEDSTATS_HPP

#include "ggtpc/common.hpp"
#include "ggtpc/synthdata.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace ggtpc::fedstats {

/// Per-(client, class) upload unit: sample count, mean, and population
/// (divide-by-n) covariance. n == 0 means all-zero mean and covariance.
struct StatTriplet {
    std::uint64_t n = 0;
    Vector mean;
    Matrix cov;

    void validate() const; // symmetry / PSD / zero-count invariants
};

/// Ordered eigenpairs of a per-class global covariance, plus the global
/// mean and total count behind it. Eigenvalues are non-increasing and
/// clamped at zero; eigenvector columns are orthonormal with the
/// largest-magnitude component of each column made positive.
struct GeometricShape {
    int class_id = -1;
    Vector mean;
    Matrix eigenvectors; // columns u_1..u_p
    Vector eigenvalues;  // lambda_1 >= ... >= lambda_p >= 0
    std::uint64_t total_n = 0;

    int dim() const { return static_cast<int>(mean.size()); }
    Matrix reconstruct() const; // U diag(lambda) U^T
};

/// Cumulative-coverage client selection: clients sorted by per-class count.
struct SelectionPolicy {
    double coverage = 0.8; // in (0, 1]
};

/// Population statistics of every class present in the dataset. Absent
/// classes yield no entry; an empty dataset yields an empty map.
std::map<int, StatTriplet> local_stats(const synthdata::ClientDataset& dataset);

/// Sorts clients by count descending (ties to the lower id) and returns the
/// minimal prefix whose cumulative count reaches coverage * total. Clients
/// with zero count never appear. Empty input or all-zero counts give an
/// empty list; the caller skips such classes.
std::vector<int> select_clients(const std::map<int, std::uint64_t>& counts,
                                const SelectionPolicy& policy);

struct GlobalMoments {
    Vector mean;
    Matrix cov;
    std::uint64_t total_n = 0;
};

/// Merges selected client triplets into global moments: the count-weighted
/// mean, and the within-client plus between-client-mean covariance split.
/// The output covariance is symmetrized as (M + M^T) / 2.
GlobalMoments reconstruct_global(const std::map<int, StatTriplet>& triplets,
                                 const std::vector<int>& selected);

/// Symmetric eigendecomposition of a covariance into a GeometricShape.
/// Negative eigenvalues clamp to zero; pairs sort by eigenvalue descending,
/// exact ties by the sign-fixed eigenvector's lexicographic order.
GeometricShape extract_shape(const Vector& mean, const Matrix& cov,
                             std::uint64_t total_n, int class_id);

} // namespace ggtpc::fedstats

#endif
