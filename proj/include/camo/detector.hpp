#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "camo/core.hpp"

namespace camo {

/// Eve's test parameters. For the RBF kernel the kernel bound is 1.
struct DetectorConfig {
  double alpha = 0.05;
  double sigma = 1.0;
  double label_scale_c = 0.0;
  double kernel_bound_K = 1.0;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("detector: alpha must lie in (0,1)");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("detector: sigma must be > 0");
    if (!(label_scale_c >= 0.0)) throw Error("detector: label scale must be >= 0");
    if (!(kernel_bound_K > 0.0)) throw Error("detector: kernel bound must be > 0");
  }
};

/// Solvers treat a set as passing Eve when psi <= -kFeasibilityMargin.
inline constexpr double kFeasibilityMargin = 1e-9;

struct DetectionVerdict {
  double mmd_value = 0.0;
  double threshold_T = 0.0;
  double psi = 0.0;
  bool suspicious = false;

  [[nodiscard]] bool feasible() const noexcept { return psi <= -kFeasibilityMargin; }
};

inline DetectionVerdict make_verdict(double mmd_value, double threshold) {
  const double psi = mmd_value - threshold;
  return {mmd_value, threshold, psi, psi >= 0.0};
}

/// Rows [x_i, c * 1{y_i = +1}], one per instance.
inline Matrix augment(const Dataset& data, double c) {
  Matrix z(static_cast<Eigen::Index>(data.size()), data.dimension() + 1);
  z.leftCols(data.dimension()) = data.features();
  for (std::size_t i = 0; i < data.size(); ++i)
    z(static_cast<Eigen::Index>(i), data.dimension()) = data.label(i) > 0 ? c : 0.0;
  return z;
}

/// exp(-|z1 - z2|^2 / (2 sigma^2)).
template <typename A, typename B>
double rbf_kernel(const Eigen::MatrixBase<A>& z1, const Eigen::MatrixBase<B>& z2, double sigma) {
  if (z1.size() != z2.size()) throw Error("rbf_kernel: dimension mismatch");
  return std::exp(-(z1 - z2).squaredNorm() / (2.0 * sigma * sigma));
}

namespace detail {

inline std::vector<double> pairwise_distances(const Matrix& z) {
  const auto n = z.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) out.push_back((z.row(i) - z.row(j)).norm());
  return out;
}

}  // namespace detail

/// Median over all n(n-1)/2 pairwise distances of the label-augmented pool,
/// zero distances included. Even pair counts average the two central values.
inline double median_heuristic_sigma(const Dataset& pool, double c) {
  if (pool.size() < 2) throw Error("median_heuristic_sigma: need at least two points");
  auto dist = detail::pairwise_distances(augment(pool, c));
  const auto mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  if (!(median > 0.0)) {
    if (*std::max_element(dist.begin(), dist.end()) == 0.0) throw Error("degenerate pool: all pairwise distances are zero");
    throw Error("degenerate pool: median pairwise distance is zero");
  }
  return median;
}

/// Largest distance between two instances of the same class.
inline double label_scale(const Dataset& pool) {
  double best = 0.0;
  bool found = false;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      if (pool.label(i) != pool.label(j)) continue;
      found = true;
      best = std::max(best, (pool.row(i) - pool.row(j)).norm());
    }
  }
  if (!found) throw Error("label_scale: no class has two members");
  return best;
}

/// Biased (V-statistic) MMD between two samples, diagonal terms included.
/// The radicand is clamped at zero before the square root.
inline double mmd(const Matrix& z, const Matrix& zp, const DetectorConfig& cfg) {
  if (z.rows() < 1 || zp.rows() < 1) throw Error("mmd: samples must be non-empty");
  if (z.cols() != zp.cols()) throw Error("mmd: dimension mismatch");
  const double n = static_cast<double>(z.rows());
  const double m = static_cast<double>(zp.rows());
  double kzz = 0.0, kzp = 0.0, kpp = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.rows(); ++j) kzz += rbf_kernel(z.row(i), z.row(j), cfg.sigma);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < zp.rows(); ++j) kzp += rbf_kernel(z.row(i), zp.row(j), cfg.sigma);
  for (Eigen::Index i = 0; i < zp.rows(); ++i)
    for (Eigen::Index j = 0; j < zp.rows(); ++j) kpp += rbf_kernel(zp.row(i), zp.row(j), cfg.sigma);
  const double radicand = kzz / (n * n) - 2.0 * kzp / (n * m) + kpp / (m * m);
  return std::sqrt(std::max(0.0, radicand));
}

/// T = 2 (sqrt(K/n) + sqrt(K/m)) + sqrt(2K(n+m)/(nm) * ln(1/alpha)).
inline double mmd_threshold(std::size_t n, std::size_t m, const DetectorConfig& cfg) {
  if (n < 1 || m < 1) throw Error("mmd_threshold: sample sizes must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error("mmd_threshold: alpha must lie in (0,1)");
  const double K = cfg.kernel_bound_K;
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  return 2.0 * (std::sqrt(K / dn) + std::sqrt(K / dm)) +
         std::sqrt(2.0 * K * (dn + dm) / (dn * dm) * std::log(1.0 / cfg.alpha));
}

/// Label scale and median-heuristic bandwidth computed from the pool.
inline DetectorConfig calibrate_detector(const Dataset& pool, double alpha = 0.05) {
  DetectorConfig cfg;
  cfg.alpha = alpha;
  cfg.label_scale_c = label_scale(pool);
  cfg.sigma = median_heuristic_sigma(pool, cfg.label_scale_c);
  cfg.kernel_bound_K = 1.0;
  cfg.validate();
  return cfg;
}

/// Psi(C, D) = MMD(C, D) - T for an arbitrary second sample D.
inline DetectionVerdict psi(const Dataset& pool, const Dataset& sample, const DetectorConfig& cfg) {
  cfg.validate();
  if (pool.dimension() != sample.dimension()) throw Error("psi: dimension mismatch");
  const double value = mmd(augment(pool, cfg.label_scale_c), augment(sample, cfg.label_scale_c), cfg);
  return make_verdict(value, mmd_threshold(pool.size(), sample.size(), cfg));
}

/// Psi(C, D) for D given as indices into the pool.
inline DetectionVerdict psi(const Dataset& pool, const CandidateSet& candidate, const DetectorConfig& cfg) {
  candidate.validate(pool.size());
  if (candidate.size() == 0) throw Error("psi: empty candidate set");
  return psi(pool, pool.subset(candidate.indices(), Role::TrainingSet), cfg);
}

/// Pool-side detector state: augmented points, Gram matrix and its row sums,
/// computed once and shared read-only by all evaluations against this pool.
class PoolDetector {
 public:
  PoolDetector(const Dataset& pool, DetectorConfig cfg) : cfg_(cfg), z_(augment(pool, cfg.label_scale_c)) {
    cfg_.validate();
    const auto n = z_.rows();
    if (n < 1) throw Error("pool detector: empty pool");
    gram_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      gram_(i, i) = 1.0;
      for (Eigen::Index j = i + 1; j < n; ++j) gram_(i, j) = gram_(j, i) = rbf_kernel(z_.row(i), z_.row(j), cfg_.sigma);
    }
    row_sums_ = gram_.rowwise().sum();
    pool_term_ = row_sums_.sum() / (static_cast<double>(n) * static_cast<double>(n));
  }

  [[nodiscard]] const DetectorConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::size_t pool_size() const noexcept { return static_cast<std::size_t>(z_.rows()); }
  [[nodiscard]] const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  [[nodiscard]] const Matrix& augmented() const noexcept { return z_; }

  /// MMD(C, C_S) for an index subset S, from cached Gram entries.
  [[nodiscard]] double mmd_subset(std::span<const std::size_t> subset) const {
    if (subset.empty()) throw Error("mmd_subset: empty subset");
    const double n = static_cast<double>(pool_size());
    const double m = static_cast<double>(subset.size());
    double cross = 0.0, inner = 0.0;
    for (auto i : subset) {
      const auto ii = static_cast<Eigen::Index>(i);
      cross += row_sums_[ii];
      for (auto j : subset) inner += gram_(ii, static_cast<Eigen::Index>(j));
    }
    const double radicand = pool_term_ - 2.0 * cross / (n * m) + inner / (m * m);
    return std::sqrt(std::max(0.0, radicand));
  }

  [[nodiscard]] DetectionVerdict verdict(const CandidateSet& candidate) const {
    candidate.validate(pool_size());
    return make_verdict(mmd_subset(candidate.indices()), mmd_threshold(pool_size(), candidate.size(), cfg_));
  }

  /// Radicand of the weighted MMD_b; may be slightly negative from roundoff.
  [[nodiscard]] double weighted_radicand(const Vector& b) const {
    check_weights(b);
    const double n = static_cast<double>(pool_size());
    const double s = b.sum();
    return pool_term_ - 2.0 * b.dot(row_sums_) / (n * s) + b.dot(gram_ * b) / (s * s);
  }

  [[nodiscard]] double weighted_mmd(const Vector& b) const { return std::sqrt(std::max(0.0, weighted_radicand(b))); }

  /// Gradient of weighted_mmd with respect to b (zero where the radicand is clamped).
  [[nodiscard]] Vector weighted_mmd_gradient(const Vector& b) const {
    check_weights(b);
    const double n = static_cast<double>(pool_size());
    const double s = b.sum();
    const Vector kb = gram_ * b;
    const double br = b.dot(row_sums_);
    const double bkb = b.dot(kb);
    const double radicand = pool_term_ - 2.0 * br / (n * s) + bkb / (s * s);
    if (radicand <= 0.0) return Vector::Zero(b.size());
    Vector grad = -2.0 * row_sums_ / (n * s) + 2.0 * kb / (s * s);
    grad.array() += 2.0 * br / (n * s * s) - 2.0 * bkb / (s * s * s);
    return grad / (2.0 * std::sqrt(radicand));
  }

 private:
  void check_weights(const Vector& b) const {
    if (b.size() != static_cast<Eigen::Index>(pool_size())) throw Error("weighted_mmd: weight count mismatch");
    if (!(b.sum() > 0.0)) throw Error("weighted_mmd: weights sum to zero");
  }

  DetectorConfig cfg_;
  Matrix z_;
  Eigen::MatrixXd gram_;
  Vector row_sums_;
  double pool_term_ = 0.0;
};

/// MMD_b(Z, b) computed directly from augmented points, no cached state.
inline double weighted_mmd(const Matrix& pool_augmented, const Vector& b, const DetectorConfig& cfg) {
  const auto n = pool_augmented.rows();
  if (b.size() != n) throw Error("weighted_mmd: weight count mismatch");
  const double s = b.sum();
  if (!(s > 0.0)) throw Error("weighted_mmd: weights sum to zero");
  double kzz = 0.0, cross = 0.0, inner = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double k = rbf_kernel(pool_augmented.row(i), pool_augmented.row(j), cfg.sigma);
      kzz += k;
      cross += b[i] * k;
      inner += b[i] * b[j] * k;
    }
  }
  const double dn = static_cast<double>(n);
  const double radicand = kzz / (dn * dn) - 2.0 * cross / (dn * s) + inner / (s * s);
  return std::sqrt(std::max(0.0, radicand));
}

}  // namespace camo
