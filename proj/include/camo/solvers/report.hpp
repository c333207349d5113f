#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "camo/core.hpp"
#include "camo/learner.hpp"

namespace camo {

struct SolverBudget {
  /// Number of learner trainings the solver may spend (B).
  std::size_t max_trainings = 1000;
  /// Beam search restarts (R); restart r gets B/R, the last one also the remainder.
  std::size_t restarts = 1;
  std::size_t beam_width = 10;
  std::size_t neighbors_per_state = 50;
  /// Uniform sampling: skip already-drawn subsets without charging the budget.
  bool dedup = false;
  std::optional<double> wall_clock_limit_seconds;

  void validate() const {
    if (max_trainings < 1) throw Error("budget: max_trainings must be >= 1");
    if (restarts < 1) throw Error("budget: restarts must be >= 1");
    if (beam_width < 1) throw Error("budget: beam_width must be >= 1");
  }
};

struct TrajectoryPoint {
  std::size_t trainings = 0;
  double best_risk = 0.0;

  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

/// Weights of the relaxed program and the model they induce.
struct RelaxedSolution {
  Vector b;
  ModelParams theta;
  double stationarity_residual = 0.0;
  double psi_b = 0.0;
  double risk = 0.0;
  double seed_risk = 0.0;
  std::size_t iterations = 0;
  std::size_t outer_rounds = 0;
  double final_penalty_weight = 0.0;
};

struct SolverReport {
  std::string solver_name;
  std::uint64_t seed = 0;
  CandidateSet best;
  double best_risk = std::numeric_limits<double>::infinity();
  double best_psi = 0.0;
  std::size_t trainings_used = 0;
  std::size_t feasibility_rejections = 0;
  std::vector<TrajectoryPoint> trajectory;
  /// Best risk among the solver's starting sets (initial beams, NLP seed, first uniform draw).
  double initial_risk = std::numeric_limits<double>::infinity();

  // Rounding diagnostics (NLP only).
  std::vector<CandidateSet> candidates;
  std::optional<RelaxedSolution> relaxed;

  /// Records a newly evaluated feasible set; keeps the first of equal risks.
  void offer(const CandidateSet& c, std::size_t trainings_so_far) {
    if (!c.cached_risk || !c.cached_psi) throw Error("report: candidate offered without cached evaluation");
    if (*c.cached_risk < best_risk) {
      best = c;
      best_risk = *c.cached_risk;
      best_psi = *c.cached_psi;
      trajectory.push_back({trainings_so_far, best_risk});
    }
  }

  [[nodiscard]] bool found() const noexcept { return best.size() > 0; }
};

/// Wall-clock guard for the optional time limit.
class Deadline {
 public:
  explicit Deadline(std::optional<double> seconds) {
    if (seconds)
      end_ = std::chrono::steady_clock::now() +
             std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(*seconds));
  }
  [[nodiscard]] bool expired() const { return end_ && std::chrono::steady_clock::now() >= *end_; }

 private:
  std::optional<std::chrono::steady_clock::time_point> end_;
};

}  // namespace camo
