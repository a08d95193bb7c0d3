#include "doctest.h"

#include <cmath>

#include "bridgesolve/rng.hpp"

using namespace bridgesolve;

TEST_CASE("noise is a pure function of seed, trajectory and step") {
  const NoiseStream a(42);
  const NoiseStream b(42);
  CHECK(a.normal(3, 5, 7) == b.normal(3, 5, 7));
  CHECK(a.normal(3, 5, 7) != a.normal(3, 5, 8));
  CHECK(a.normal(3, 5, 7) != NoiseStream(43).normal(3, 5, 7));
  CHECK(a.uniform(2, 3, 4) == b.uniform(2, 3, 4));
}

TEST_CASE("shifted streams reproduce the matching columns") {
  const NoiseStream full(9);
  const Batch whole = full.normal(2, 10, 3);
  const Batch tail = full.shifted(6).normal(2, 4, 3);
  CHECK(whole.rightCols(4) == tail);
  const Batch head = full.normal(2, 3, 3);
  CHECK(whole.leftCols(3) == head);
}

TEST_CASE("keyed fill matches plain fill") {
  const NoiseStream s(5, 11);
  Batch plain(3, 6), keyed(3, 6);
  s.fill_normal(plain, 17);
  s.fill_normal_keyed(keyed, 17, s.trajectory_keys(6));
  CHECK(plain == keyed);
}

TEST_CASE("normal moments") {
  const NoiseStream s(1234);
  const Batch z = s.normal(4, 50000, 0);
  const double n = static_cast<double>(z.size());
  const double mean = z.mean();
  const double var = (z.array() - mean).square().sum() / n;
  const double skew = (z.array() - mean).cube().sum() / n;
  const double kurt = (z.array() - mean).pow(4).sum() / n;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(skew) < 4.0 * std::sqrt(15.0 / n));
  CHECK(std::abs(kurt - 3.0) < 4.0 * std::sqrt(96.0 / n));
  // Rows (lanes) are uncorrelated.
  const double cross = (z.row(0).array() * z.row(1).array()).mean();
  CHECK(std::abs(cross) < 4.0 / std::sqrt(50000.0));
}

TEST_CASE("uniform range and mean") {
  const NoiseStream s(3);
  double acc = 0.0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const double u = s.uniform(i, 0, 0);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    acc += u;
  }
  CHECK(std::abs(acc / 100000.0 - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / 100000.0));
}
