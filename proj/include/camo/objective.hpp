#pragma once

#include <cstddef>
#include <limits>
#include <memory>

#include "camo/core.hpp"
#include "camo/detector.hpp"
#include "camo/learner.hpp"

namespace camo {

/// One instance of the camouflage problem: pool C, secret set D_S, subset size m,
/// Bob's configuration and Eve's pool-calibrated detector.
///
/// Evaluating a candidate checks Psi first; only feasible candidates are trained,
/// and each training is counted.
class CamouflageProblem {
 public:
  CamouflageProblem(const Dataset& pool, const Dataset& secret, std::size_t m, LearnerConfig learner,
                    DetectorConfig detector)
      : pool_(&pool),
        secret_(&secret),
        m_(m),
        learner_(learner),
        detector_(std::make_shared<const PoolDetector>(pool, detector)) {
    learner_.validate();
    if (pool.empty()) throw Error("problem: empty camouflage pool");
    if (secret.empty()) throw Error("problem: empty secret set");
    if (pool.dimension() != secret.dimension()) throw Error("problem: pool and secret dimensions differ");
    if (m == 0) throw Error("problem: m must be >= 1");
    if (m > pool.size())
      throw Error("problem: m=" + std::to_string(m) + " exceeds pool size " + std::to_string(pool.size()));
    threshold_ = mmd_threshold(pool.size(), m, detector);
  }

  [[nodiscard]] const Dataset& pool() const noexcept { return *pool_; }
  [[nodiscard]] const Dataset& secret() const noexcept { return *secret_; }
  [[nodiscard]] std::size_t m() const noexcept { return m_; }
  [[nodiscard]] const LearnerConfig& learner() const noexcept { return learner_; }
  [[nodiscard]] const DetectorConfig& detector_config() const noexcept { return detector_->config(); }
  [[nodiscard]] const PoolDetector& detector() const noexcept { return *detector_; }
  /// T(n, m) for this problem's sizes.
  [[nodiscard]] double threshold() const noexcept { return threshold_; }

  /// Psi(C, D) for the candidate, cached on it.
  double psi(CandidateSet& candidate) const {
    if (!candidate.cached_psi) {
      const double t = candidate.size() == m_ ? threshold_ : mmd_threshold(pool_->size(), candidate.size(), detector_config());
      candidate.cached_psi = detector_->mmd_subset(candidate.indices()) - t;
    }
    return *candidate.cached_psi;
  }

  bool feasible(CandidateSet& candidate) const { return psi(candidate) <= -kFeasibilityMargin; }

  /// Bob's model trained on the materialized subset.
  [[nodiscard]] ModelParams train_on(const CandidateSet& candidate) const {
    const Dataset d = pool_->subset(candidate.indices(), Role::TrainingSet);
    return train(WeightedTrainingView::all(d), learner_);
  }

  /// Secret-set risk of Bob trained on the candidate; trains and counts one
  /// training unless the risk is already cached.
  double risk(CandidateSet& candidate) {
    if (!candidate.cached_risk) {
      candidate.cached_risk = empirical_risk(train_on(candidate), *secret_);
      ++trainings_;
    }
    return *candidate.cached_risk;
  }

  [[nodiscard]] std::size_t trainings() const noexcept { return trainings_; }
  void reset_trainings() noexcept { trainings_ = 0; }
  void count_training() noexcept { ++trainings_; }

 private:
  const Dataset* pool_;
  const Dataset* secret_;
  std::size_t m_;
  LearnerConfig learner_;
  std::shared_ptr<const PoolDetector> detector_;
  double threshold_ = 0.0;
  std::size_t trainings_ = 0;
};

}  // namespace camo
