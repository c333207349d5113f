#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "camo/detector.hpp"
#include "camo/learner.hpp"
#include "camo/objective.hpp"
#include "camo/solvers/report.hpp"

namespace camo {

struct RelaxedOptions {
  /// Penalty weight on max(0, Psi_b + margin)^2; multiplied by 10 per outer round.
  double penalty_start = 1.0;
  double penalty_max = 1e6;
  std::size_t max_inner_iterations = 50;
  /// Inner loop stops once a projected step moves b by less than this (inf-norm).
  double step_tol = 1e-9;
  /// Training budget shared by the relaxed phase and rounding.
  std::size_t max_trainings = 1000;
  std::optional<double> wall_clock_limit_seconds;
};

/// Euclidean projection onto {b in [0,1]^n : sum b = m}, by bisection on the
/// shift tau in b_i = clamp(v_i - tau, 0, 1).
inline Vector project_capped_simplex(const Vector& v, double m) {
  const auto n = v.size();
  if (m < 0.0 || m > static_cast<double>(n)) throw Error("projection: target sum outside [0, n]");
  auto mass = [&](double tau) { return (v.array() - tau).cwiseMax(0.0).cwiseMin(1.0).sum(); };
  double lo = v.minCoeff() - 1.0;  // mass(lo) = n
  double hi = v.maxCoeff();        // mass(hi) = 0
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (mass(mid) > m ? lo : hi) = mid;
  }
  const double tau = 0.5 * (lo + hi);
  return (v.array() - tau).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

/// Penalized relaxed objective: secret risk of theta_hat(b) plus the MMD_b
/// feasibility penalty, with its gradient. Each evaluation trains once.
class RelaxedObjective {
 public:
  explicit RelaxedObjective(CamouflageProblem& problem) : problem_(problem) {}

  struct Point {
    Vector b;
    Vector theta;
    double risk = 0.0;
    double psi_b = 0.0;
    double residual = 0.0;
  };

  Point evaluate(const Vector& b) {
    Point p;
    p.b = b;
    const WeightedTrainingView view(problem_.pool(), b);
    p.theta = train(view, problem_.learner()).theta;
    problem_.count_training();
    p.residual = stationarity_residual(view, problem_.learner(), p.theta);
    p.risk = empirical_risk(p.theta, problem_.secret());
    p.psi_b = problem_.detector().weighted_mmd(b) - problem_.threshold();
    return p;
  }

  [[nodiscard]] static double violation(const Point& p) { return std::max(0.0, p.psi_b + kFeasibilityMargin); }

  [[nodiscard]] static double penalized(const Point& p, double mu) {
    const double v = violation(p);
    return p.risk + mu * v * v;
  }

  [[nodiscard]] Vector gradient(const Point& p, double mu) const {
    const WeightedTrainingView view(problem_.pool(), p.b);
    Vector g = risk_gradient_wrt_weights(view, problem_.learner(), problem_.secret(), p.theta);
    const double v = violation(p);
    if (v > 0.0) g += 2.0 * mu * v * problem_.detector().weighted_mmd_gradient(p.b);
    return g;
  }

 private:
  CamouflageProblem& problem_;
};

/// Minimizes the secret risk of theta_hat(b) over b in [0,1]^n with sum b = m,
/// starting from the indicator of `seed_set`.
///
/// Projected gradient with Armijo backtracking on the penalized objective; the
/// Psi_b < 0 constraint is penalized with weights escalated x10 per outer round
/// until the iterate is feasible. Stationarity holds by retraining at every
/// iterate. The returned b is the lowest-risk feasible iterate, so it is never
/// worse than the seed.
inline RelaxedSolution solve_relaxed(CamouflageProblem& problem, CandidateSet seed_set, const RelaxedOptions& opts) {
  const auto n = static_cast<Eigen::Index>(problem.pool().size());
  const double m = static_cast<double>(problem.m());
  seed_set.validate(problem.pool().size());
  if (seed_set.size() != problem.m()) throw Error("solve_relaxed: seed set size differs from m");
  if (!problem.feasible(seed_set)) throw Error("solve_relaxed: seed set is flagged by the detector");

  const Deadline deadline(opts.wall_clock_limit_seconds);
  // Trainings reserved for rounding (m + 1 candidates).
  const std::size_t reserve = problem.m() + 1;
  const std::size_t relaxed_budget = opts.max_trainings > reserve ? opts.max_trainings - reserve : 1;
  const std::size_t start_trainings = problem.trainings();
  auto budget_left = [&] { return problem.trainings() - start_trainings < relaxed_budget; };

  RelaxedObjective objective(problem);
  Vector b0 = Vector::Zero(n);
  for (auto i : seed_set.indices()) b0[static_cast<Eigen::Index>(i)] = 1.0;
  auto current = objective.evaluate(b0);
  const double seed_risk = current.risk;
  auto best = current;

  RelaxedSolution sol;
  double mu = opts.penalty_start;
  for (; mu <= opts.penalty_max; mu *= 10.0) {
    ++sol.outer_rounds;
    double f = RelaxedObjective::penalized(current, mu);
    double step = -1.0;
    for (std::size_t it = 0; it < opts.max_inner_iterations && budget_left() && !deadline.expired(); ++it) {
      const Vector g = objective.gradient(current, mu);
      const double gmax = g.lpNorm<Eigen::Infinity>();
      if (!(gmax > 0.0)) break;
      if (step < 0.0) step = 1.0 / gmax;
      bool accepted = false;
      double moved = 0.0;
      while (budget_left()) {
        const Vector candidate_b = project_capped_simplex(current.b - step * g, m);
        const Vector delta = candidate_b - current.b;
        moved = delta.lpNorm<Eigen::Infinity>();
        if (moved < opts.step_tol) break;
        auto trial = objective.evaluate(candidate_b);
        const double f_trial = RelaxedObjective::penalized(trial, mu);
        if (f_trial <= f - 1e-4 / step * delta.squaredNorm()) {
          current = std::move(trial);
          f = f_trial;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      ++sol.iterations;
      if (!accepted) break;
      if (current.psi_b <= -kFeasibilityMargin && current.risk < best.risk) best = current;
      step *= 2.0;
      if (moved < opts.step_tol) break;
    }
    if (current.psi_b <= -kFeasibilityMargin || !budget_left() || deadline.expired()) break;
  }

  sol.b = best.b;
  sol.theta = {best.theta};
  sol.stationarity_residual = best.residual;
  sol.psi_b = best.psi_b;
  sol.risk = best.risk;
  sol.seed_risk = seed_risk;
  sol.final_penalty_weight = std::min(mu, opts.penalty_max);
  return sol;
}

/// The m+1 rounding candidates: T_c keeps the m-c largest-b members of the seed
/// and adds the c largest-b non-members (ties broken by lower pool index).
/// T_0 is the seed; T_m is the top-m of the complement. When the complement has
/// fewer than m members, c stops at its size.
inline std::vector<CandidateSet> rounding_candidates(const Vector& b, const CandidateSet& seed_set) {
  const auto n = static_cast<std::size_t>(b.size());
  seed_set.validate(n);
  std::vector<std::size_t> inside = seed_set.indices();
  std::vector<std::size_t> outside;
  for (std::size_t i = 0; i < n; ++i)
    if (!seed_set.contains(i)) outside.push_back(i);
  auto by_weight_desc = [&](std::size_t a, std::size_t c) {
    const double ba = b[static_cast<Eigen::Index>(a)];
    const double bc = b[static_cast<Eigen::Index>(c)];
    return ba != bc ? ba > bc : a < c;
  };
  std::sort(inside.begin(), inside.end(), by_weight_desc);
  std::sort(outside.begin(), outside.end(), by_weight_desc);

  const std::size_t m = inside.size();
  const std::size_t swaps = std::min(m, outside.size());
  std::vector<CandidateSet> out;
  out.reserve(swaps + 1);
  for (std::size_t c = 0; c <= swaps; ++c) {
    std::vector<std::size_t> idx(inside.begin(), inside.begin() + static_cast<std::ptrdiff_t>(m - c));
    idx.insert(idx.end(), outside.begin(), outside.begin() + static_cast<std::ptrdiff_t>(c));
    out.emplace_back(std::move(idx));
  }
  return out;
}

/// Rounds relaxed weights: evaluates every feasible rounding candidate and
/// returns the one with least secret risk (earliest candidate on ties).
inline SolverReport round_relaxed(const RelaxedSolution& sol, CandidateSet seed_set, CamouflageProblem& problem) {
  if (sol.b.size() != static_cast<Eigen::Index>(problem.pool().size())) throw Error("round_relaxed: weight size mismatch");
  if (seed_set.size() != problem.m()) throw Error("round_relaxed: seed set size differs from m");
  if (!problem.feasible(seed_set)) throw Error("round_relaxed: seed set is flagged by the detector");

  SolverReport report;
  report.solver_name = "nlp";
  report.candidates = rounding_candidates(sol.b, seed_set);
  for (auto& c : report.candidates) {
    if (!problem.feasible(c)) {
      ++report.feasibility_rejections;
      continue;
    }
    problem.risk(c);
    if (c == seed_set) report.initial_risk = *c.cached_risk;
    report.offer(c, problem.trainings());
  }
  report.trainings_used = problem.trainings();
  report.relaxed = sol;
  return report;
}

/// Relaxed solve followed by rounding, seeded with a feasible set.
inline SolverReport solve_nlp(CamouflageProblem& problem, const CandidateSet& seed_set, const RelaxedOptions& opts) {
  if (opts.max_trainings < problem.m() + 2)
    throw Error("solve_nlp: budget must cover the seed evaluation and m+1 rounding candidates");
  problem.reset_trainings();
  auto sol = solve_relaxed(problem, seed_set, opts);
  CandidateSet seed = seed_set;
  seed.cached_risk.reset();
  auto report = round_relaxed(sol, seed, problem);
  report.trainings_used = problem.trainings();
  return report;
}

}  // namespace camo
