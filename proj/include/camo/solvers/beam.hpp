#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "camo/dataset_io.hpp"
#include "camo/objective.hpp"
#include "camo/rng.hpp"
#include "camo/solvers/report.hpp"
#include "camo/solvers/uniform.hpp"

namespace camo {

/// Up to `count` distinct feasible single-swap neighbors of `state`.
///
/// Each proposal swaps a uniformly chosen member for a uniformly chosen
/// non-member. Flagged proposals are dropped and redrawn, at most 20*count
/// proposals in total. Nothing here trains the learner.
inline std::vector<CandidateSet> neighbors(const CandidateSet& state, CamouflageProblem& problem, std::size_t count,
                                           RngState& rng, std::size_t* rejections = nullptr) {
  std::vector<CandidateSet> out;
  const std::size_t n = problem.pool().size();
  const std::size_t m = state.size();
  if (count == 0 || m == 0 || m >= n) return out;

  std::vector<std::size_t> outside;
  outside.reserve(n - m);
  for (std::size_t i = 0; i < n; ++i)
    if (!state.contains(i)) outside.push_back(i);

  std::set<std::vector<std::size_t>> seen;
  const std::size_t max_proposals = 20 * count;
  for (std::size_t p = 0; p < max_proposals && out.size() < count; ++p) {
    auto idx = state.indices();
    const auto drop = rng.uniform_index(m);
    const auto add = rng.uniform_index(outside.size());
    idx[drop] = outside[add];
    CandidateSet proposal(std::move(idx));
    if (!seen.insert(proposal.indices()).second) continue;
    if (!problem.feasible(proposal)) {
      if (rejections) ++*rejections;
      continue;
    }
    out.push_back(std::move(proposal));
  }
  return out;
}

namespace detail {

inline bool by_risk(const CandidateSet& a, const CandidateSet& b) {
  if (*a.cached_risk != *b.cached_risk) return *a.cached_risk < *b.cached_risk;
  return a.indices() < b.indices();
}

}  // namespace detail

/// Beam search with random restarts.
///
/// Each restart seeds the beam with w random feasible sets, then repeatedly
/// evaluates sampled neighbors of every beam member and keeps the w lowest-risk
/// sets among beam and new neighbors. A restart ends when its share of the
/// training budget is spent or an iteration yields no new neighbor.
inline SolverReport solve_beam(CamouflageProblem& problem, const SolverBudget& budget, RngState& rng) {
  budget.validate();
  problem.reset_trainings();
  SolverReport report;
  report.solver_name = "beam";
  report.seed = rng.seed();

  const std::size_t n = problem.pool().size();
  const std::size_t m = problem.m();
  const std::size_t B = budget.max_trainings;
  const std::size_t R = budget.restarts;
  const std::size_t w = budget.beam_width;
  const Deadline deadline(budget.wall_clock_limit_seconds);

  for (std::size_t r = 0; r < R && problem.trainings() < B; ++r) {
    const std::size_t share = B / R + (r + 1 == R ? B % R : 0);
    const std::size_t limit = std::min(B, problem.trainings() + share);
    if (share == 0) continue;

    // Initial beam: w distinct feasible random sets.
    std::vector<CandidateSet> beam;
    std::set<std::vector<std::size_t>> drawn;
    const std::size_t init_cap = 100 * w;
    for (std::size_t draws = 0; draws < init_cap && beam.size() < w; ++draws) {
      CandidateSet c = sample_subset(n, m, rng);
      if (!drawn.insert(c.indices()).second) continue;
      if (!problem.feasible(c)) {
        ++report.feasibility_rejections;
        continue;
      }
      beam.push_back(std::move(c));
    }
    if (beam.empty() || (beam.size() < w && drawn.size() < detail::binomial(n, m)))
      throw Error("beam search: could not find " + std::to_string(w) + " feasible initial sets");

    std::vector<CandidateSet> evaluated;
    for (auto& c : beam) {
      if (problem.trainings() >= limit) break;
      problem.risk(c);
      report.initial_risk = std::min(report.initial_risk, *c.cached_risk);
      report.offer(c, problem.trainings());
      evaluated.push_back(std::move(c));
    }
    beam = std::move(evaluated);
    std::sort(beam.begin(), beam.end(), detail::by_risk);

    while (problem.trainings() < limit && !deadline.expired()) {
      std::set<std::vector<std::size_t>> in_round;
      for (const auto& c : beam) in_round.insert(c.indices());
      std::vector<CandidateSet> fresh;
      for (const auto& state : beam) {
        for (auto& nb : neighbors(state, problem, budget.neighbors_per_state, rng, &report.feasibility_rejections)) {
          if (in_round.insert(nb.indices()).second) fresh.push_back(std::move(nb));
        }
      }
      if (fresh.empty()) break;
      for (auto& nb : fresh) {
        if (problem.trainings() >= limit) break;
        problem.risk(nb);
        report.offer(nb, problem.trainings());
        beam.push_back(std::move(nb));
      }
      // Unevaluated neighbors (budget ran out mid-round) have no risk and are dropped.
      std::erase_if(beam, [](const CandidateSet& c) { return !c.cached_risk; });
      std::sort(beam.begin(), beam.end(), detail::by_risk);
      if (beam.size() > w) beam.resize(w);
    }
    if (deadline.expired()) break;
  }
  report.trainings_used = problem.trainings();
  if (!report.found()) throw Error("beam search: no feasible set evaluated");
  return report;
}

}  // namespace camo
