#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace polyproc {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and a stream index
/// (splitmix64 finalizer over the mixed pair).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

inline Rng make_rng(std::uint64_t base, std::uint64_t stream) { return Rng(derive_seed(base, stream)); }

Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n);

}  // namespace polyproc
