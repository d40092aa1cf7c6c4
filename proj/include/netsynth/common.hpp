#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "netsynth/nn.hpp"

namespace netsynth {

using Rng = std::mt19937_64;

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

/// Rows of m selected by index, in the given order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

/// 64-bit FNV-1a over raw bytes, chained through `seed`.
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 14695981039346656037ull);

std::uint64_t row_fingerprint(const Matrix& m, Eigen::Index row);

/// Seeds derived from a parent seed and a stream label, so sub-stages never
/// share a generator state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace netsynth
