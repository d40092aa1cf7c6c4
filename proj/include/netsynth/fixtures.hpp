#pragma once

// Seeded synthetic datasets used for testing and demonstrations.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "netsynth/dataio.hpp"

namespace netsynth {

enum class FixtureKind { two_moons, mixed_clusters, imbalanced_ids };

FixtureKind fixture_from_string(const std::string& name);
std::string to_string(FixtureKind kind);

/// Two interleaved half circles (features x, y) with Gaussian jitter; rows
/// alternate between the moons.
Dataset two_moons(std::size_t n, std::uint64_t seed, double noise = 0.05);

/// Four continuous and two discrete features drawn from two equally likely
/// components. The binary flag and the protocol column depend on the
/// component, as do the continuous means.
Dataset mixed_clusters(std::size_t n, std::uint64_t seed);
/// Continuous means of the two mixed_clusters components, in raw units.
std::array<std::array<double, 4>, 2> mixed_cluster_centers();

/// Labeled flow-like table: 12 continuous features (8 heavy-tailed counters),
/// 4 binary flags and a 3-valued protocol, with benign:attack = 5.5:1.
Dataset imbalanced_ids(std::size_t n, std::uint64_t seed);

Dataset make_fixture(FixtureKind kind, std::size_t n, std::uint64_t seed);

}  // namespace netsynth
