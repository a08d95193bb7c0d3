#pragma once

#include <cstdint>
#include <vector>

#include "bridgesolve/bridge.hpp"

namespace bridgesolve {

/// Counter-based standard-normal source.
///
/// A draw is a pure function of (seed, trajectory, step, lane), so results do
/// not depend on batch layout or evaluation order. Column j of a batch is
/// trajectory `first_trajectory + j`.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed, std::uint64_t first_trajectory = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t first_trajectory() const { return first_trajectory_; }

  /// Stream for a sub-batch starting `offset` trajectories later.
  NoiseStream shifted(std::uint64_t offset) const { return NoiseStream(seed_, first_trajectory_ + offset); }

  /// Uniform in (0, 1).
  double uniform(std::uint64_t trajectory, std::uint64_t step, std::uint64_t lane) const;

  /// Fills `out` (rows x cols) with independent N(0, 1) draws for `step`.
  void fill_normal(Batch& out, std::uint64_t step) const;
  Batch normal(Eigen::Index rows, Eigen::Index cols, std::uint64_t step) const;

  /// Per-column trajectory keys for fill_normal_keyed; hoists one hash per
  /// column out of repeated per-step draws.
  std::vector<std::uint64_t> trajectory_keys(Eigen::Index cols) const;
  /// Same values as fill_normal, using keys from trajectory_keys.
  void fill_normal_keyed(Batch& out, std::uint64_t step, const std::vector<std::uint64_t>& keys) const;

  /// Writes n normals for one trajectory into dst.
  void normals_for(double* dst, Eigen::Index n, std::uint64_t trajectory, std::uint64_t step) const;

 private:
  std::uint64_t key(std::uint64_t trajectory, std::uint64_t step, std::uint64_t lane) const;
  void normals_from_key(double* dst, Eigen::Index n, std::uint64_t trajectory_key, std::uint64_t step) const;

  std::uint64_t seed_;
  std::uint64_t seed_hash_;
  std::uint64_t first_trajectory_;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace bridgesolve
