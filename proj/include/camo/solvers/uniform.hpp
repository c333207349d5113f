#pragma once

#include <cmath>
#include <set>
#include <vector>

#include "camo/dataset_io.hpp"
#include "camo/objective.hpp"
#include "camo/rng.hpp"
#include "camo/solvers/report.hpp"

namespace camo {

namespace detail {

/// C(n, k), saturating at the largest size_t.
inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (r > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2))
      return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(std::llround(r));
}

}  // namespace detail

/// Uniform sampling: draw m-subsets, discard the ones Eve flags (free of charge),
/// train on the rest until B trainings, keep the lowest secret risk.
///
/// At most 10*B subsets are drawn. With dedup, repeated draws are skipped and the
/// search ends early once every m-subset has been seen.
inline SolverReport solve_uniform(CamouflageProblem& problem, const SolverBudget& budget, RngState& rng) {
  budget.validate();
  problem.reset_trainings();
  SolverReport report;
  report.solver_name = "uniform";
  report.seed = rng.seed();

  const std::size_t n = problem.pool().size();
  const std::size_t m = problem.m();
  const std::size_t draw_cap = 10 * budget.max_trainings;
  const std::size_t subset_count = detail::binomial(n, m);
  const Deadline deadline(budget.wall_clock_limit_seconds);
  std::set<std::vector<std::size_t>> seen;

  for (std::size_t draws = 0; draws < draw_cap && problem.trainings() < budget.max_trainings; ++draws) {
    if (deadline.expired() && report.found()) break;
    if (budget.dedup && seen.size() >= subset_count) break;
    CandidateSet candidate = sample_subset(n, m, rng);
    if (budget.dedup && !seen.insert(candidate.indices()).second) continue;
    if (!problem.feasible(candidate)) {
      ++report.feasibility_rejections;
      continue;
    }
    problem.risk(candidate);
    if (!report.found()) report.initial_risk = *candidate.cached_risk;
    report.offer(candidate, problem.trainings());
  }
  report.trainings_used = problem.trainings();
  if (!report.found()) throw Error("feasible region unreachable");
  return report;
}

}  // namespace camo
