#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "camo/core.hpp"
#include "camo/rng.hpp"

namespace camo {

/// Two-blob secret task and two-blob cover task in R^d.
///
/// Secret blobs sit at +/- secret_separation/2 along e0. Cover blobs sit at
/// +/- cover_separation/2 along cos(rotation) e0 + sin(rotation) e1. All blobs
/// are isotropic Gaussians; the label is the blob the point was drawn from.
struct SyntheticSpec {
  Eigen::Index dimension = 2;
  double secret_separation = 4.0;
  double secret_std = 0.5;
  std::size_t secret_train_per_class = 50;
  std::size_t secret_test_per_class = 250;
  double cover_separation = 1.0;
  double cover_std = 1.0;
  std::size_t cover_per_class = 100;
  double rotation = 1.5707963267948966;
  std::uint64_t seed = 0;

  void validate() const {
    if (dimension < 2) throw Error("synthetic spec: dimension must be >= 2");
    if (secret_train_per_class < 2 || secret_test_per_class < 2 || cover_per_class < 2)
      throw Error("synthetic spec: need at least two points per class");
    if (!(secret_std >= 0.0) || !(cover_std >= 0.0)) throw Error("synthetic spec: std must be >= 0");
  }
};

struct SyntheticTask {
  Dataset secret;
  Dataset cover;
  Dataset secret_test;
};

namespace detail {

inline Dataset gaussian_pair(const Vector& direction, double separation, double std_dev, std::size_t per_class,
                             Role role, RngState& rng) {
  const auto d = direction.size();
  Matrix x(static_cast<Eigen::Index>(2 * per_class), d);
  Vector y(static_cast<Eigen::Index>(2 * per_class));
  // Interleave classes so that any prefix is roughly balanced.
  for (std::size_t k = 0; k < 2 * per_class; ++k) {
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    const auto r = static_cast<Eigen::Index>(k);
    for (Eigen::Index j = 0; j < d; ++j) x(r, j) = sign * 0.5 * separation * direction[j] + std_dev * rng.normal();
    y[r] = sign;
  }
  return Dataset(std::move(x), std::move(y), role);
}

}  // namespace detail

/// Deterministic draw of (secret train, cover pool, secret test).
inline SyntheticTask generate(const SyntheticSpec& spec) {
  spec.validate();
  const RngState root(spec.seed);
  Vector secret_dir = Vector::Zero(spec.dimension);
  secret_dir[0] = 1.0;
  Vector cover_dir = Vector::Zero(spec.dimension);
  cover_dir[0] = std::cos(spec.rotation);
  cover_dir[1] = std::sin(spec.rotation);

  RngState secret_rng = root.split(0);
  RngState cover_rng = root.split(1);
  RngState test_rng = root.split(2);
  return {
      detail::gaussian_pair(secret_dir, spec.secret_separation, spec.secret_std, spec.secret_train_per_class,
                            Role::SecretSet, secret_rng),
      detail::gaussian_pair(cover_dir, spec.cover_separation, spec.cover_std, spec.cover_per_class,
                            Role::CamouflagePool, cover_rng),
      detail::gaussian_pair(secret_dir, spec.secret_separation, spec.secret_std, spec.secret_test_per_class,
                            Role::TestSet, test_rng),
  };
}

}  // namespace camo
