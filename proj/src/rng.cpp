#include "bridgesolve/rng.hpp"

#include <cmath>

namespace bridgesolve {

namespace {

constexpr std::uint64_t kStepMul = 0xd6e8feb86659fd93ULL;
constexpr std::uint64_t kLaneMul = 0xa0761d6478bd642fULL;
constexpr std::uint64_t kRetry = 0x8bb84b93962eacc9ULL;

// 53 random bits mapped into (0, 1).
double to_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

// Marsaglia polar pair from a hash chain; rejected candidates rehash.
void polar_pair(std::uint64_t h, double& a, double& b) {
  for (;;) {
    const double u = 2.0 * to_unit(h) - 1.0;
    const double v = 2.0 * to_unit(mix64(h)) - 1.0;
    const double s = u * u + v * v;
    if (s < 1.0 && s > 0.0) {
      const double f = std::sqrt(-2.0 * std::log(s) / s);
      a = u * f;
      b = v * f;
      return;
    }
    h = mix64(h ^ kRetry);
  }
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t first_trajectory)
    : seed_(seed), seed_hash_(mix64(seed)), first_trajectory_(first_trajectory) {}

std::uint64_t NoiseStream::key(std::uint64_t trajectory, std::uint64_t step, std::uint64_t lane) const {
  const std::uint64_t h = mix64(mix64(seed_hash_ ^ trajectory) ^ (step * kStepMul));
  return mix64(h ^ (lane * kLaneMul));
}

double NoiseStream::uniform(std::uint64_t trajectory, std::uint64_t step, std::uint64_t lane) const {
  return to_unit(key(trajectory, step, lane));
}

void NoiseStream::normals_from_key(double* dst, Eigen::Index n, std::uint64_t trajectory_key,
                                   std::uint64_t step) const {
  const std::uint64_t h = mix64(trajectory_key ^ (step * kStepMul));
  for (Eigen::Index i = 0; i < n; i += 2) {
    double a = 0.0, b = 0.0;
    polar_pair(mix64(h ^ (static_cast<std::uint64_t>(i / 2) * kLaneMul)), a, b);
    dst[i] = a;
    if (i + 1 < n) dst[i + 1] = b;
  }
}

void NoiseStream::normals_for(double* dst, Eigen::Index n, std::uint64_t trajectory,
                              std::uint64_t step) const {
  normals_from_key(dst, n, mix64(seed_hash_ ^ trajectory), step);
}

std::vector<std::uint64_t> NoiseStream::trajectory_keys(Eigen::Index cols) const {
  std::vector<std::uint64_t> keys(static_cast<std::size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j) keys[j] = mix64(seed_hash_ ^ (first_trajectory_ + static_cast<std::uint64_t>(j)));
  return keys;
}

void NoiseStream::fill_normal_keyed(Batch& out, std::uint64_t step, const std::vector<std::uint64_t>& keys) const {
  for (Eigen::Index j = 0; j < out.cols(); ++j) normals_from_key(out.col(j).data(), out.rows(), keys[j], step);
}

void NoiseStream::fill_normal(Batch& out, std::uint64_t step) const {
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    normals_for(out.col(j).data(), out.rows(), first_trajectory_ + static_cast<std::uint64_t>(j), step);
  }
}

Batch NoiseStream::normal(Eigen::Index rows, Eigen::Index cols, std::uint64_t step) const {
  Batch out(rows, cols);
  fill_normal(out, step);
  return out;
}

}  // namespace bridgesolve
