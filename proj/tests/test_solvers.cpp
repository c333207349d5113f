#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "camo/camo.hpp"
#include "test_support.hpp"

namespace camo {
namespace {

struct Instance {
  SyntheticTask task;
  DetectorConfig det;
};

Instance make_instance(std::size_t cover_per_class, std::uint64_t seed) {
  auto task = testing::small_task(cover_per_class, seed);
  auto det = calibrate_detector(task.cover);
  return {std::move(task), det};
}

void expect_non_increasing(const SolverReport& r) {
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    EXPECT_LE(r.trajectory[i].best_risk, r.trajectory[i - 1].best_risk);
    EXPECT_GE(r.trajectory[i].trainings, r.trajectory[i - 1].trainings);
  }
  ASSERT_FALSE(r.trajectory.empty());
  EXPECT_EQ(r.trajectory.back().best_risk, r.best_risk);
}

void expect_feasible(const Dataset& pool, const SolverReport& r, const DetectorConfig& det) {
  const auto v = psi(pool, r.best, det);
  EXPECT_LT(v.psi, 0.0);
  EXPECT_FALSE(v.suspicious);
}

// ---- uniform ---------------------------------------------------------------

TEST(SolveUniform, BudgetOfOneReturnsFirstFeasibleDraw) {
  auto inst = make_instance(20, 1);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 5, {}, inst.det);
  SolverBudget budget;
  budget.max_trainings = 1;
  RngState rng(42), replay(42);
  const auto report = solve_uniform(problem, budget, rng);
  EXPECT_EQ(report.best, sample_subset(inst.task.cover, 5, replay));
  EXPECT_EQ(report.trainings_used, 1u);
}

// All 56 subsets of an 8-point pool pass the detector; uniform sampling with
// dedup and B >= 56 must hit the enumerated optimum.
TEST(SolveUniform, FindsExhaustiveOptimumOnTinyPool) {
  auto inst = make_instance(4, 2);
  const auto oracle = testing::exhaustive_optimum(inst.task.cover, inst.task.secret, 3, {}, inst.det);
  ASSERT_EQ(oracle.subsets, 56u);
  ASSERT_EQ(oracle.feasible, 56u);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 3, {}, inst.det);
  SolverBudget budget;
  budget.max_trainings = 100;
  budget.dedup = true;
  RngState rng(7);
  const auto report = solve_uniform(problem, budget, rng);
  EXPECT_EQ(report.best.indices(), oracle.argmin);
  EXPECT_NEAR(report.best_risk, oracle.min_risk, 1e-12);
  EXPECT_EQ(report.trainings_used, 56u);
  expect_non_increasing(report);
}

TEST(SolveUniform, DeterministicUnderSeed) {
  auto inst = make_instance(30, 3);
  CamouflageProblem p1(inst.task.cover, inst.task.secret, 6, {}, inst.det);
  CamouflageProblem p2(inst.task.cover, inst.task.secret, 6, {}, inst.det);
  SolverBudget budget;
  budget.max_trainings = 50;
  RngState r1(5), r2(5);
  const auto a = solve_uniform(p1, budget, r1);
  const auto b = solve_uniform(p2, budget, r2);
  EXPECT_EQ(json(a).dump(), json(b).dump());
}

TEST(SolveUniform, RejectionsAreFreeAndResultFeasible) {
  const auto pool = testing::trap_pool(4);
  const auto task = testing::small_task(10, 4);
  const auto det = calibrate_detector(pool);
  CamouflageProblem problem(pool, task.secret, testing::kTrapM, {}, det);
  SolverBudget budget;
  budget.max_trainings = 40;
  RngState rng(8);
  const auto report = solve_uniform(problem, budget, rng);
  EXPECT_LE(report.trainings_used, 40u);
  expect_feasible(pool, report, det);
}

TEST(SolveUniform, UnreachableFeasibleRegion) {
  auto inst = make_instance(10, 5);
  // A vanishing kernel bound drives T to ~0, so every proper subset is flagged.
  inst.det.kernel_bound_K = 1e-12;
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 4, {}, inst.det);
  SolverBudget budget;
  budget.max_trainings = 5;
  RngState rng(1);
  try {
    solve_uniform(problem, budget, rng);
    FAIL() << "expected failure";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "feasible region unreachable");
  }
  EXPECT_EQ(problem.trainings(), 0u);
}

// ---- neighbors --------------------------------------------------------------

TEST(Neighbors, WholePoolHasNoNeighbors) {
  auto inst = make_instance(3, 6);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 6, {}, inst.det);
  RngState rng(1);
  EXPECT_TRUE(neighbors(CandidateSet({0, 1, 2, 3, 4, 5}), problem, 10, rng).empty());
}

TEST(Neighbors, DifferInExactlyOneIndex) {
  std::vector<LabeledInstance> rows;
  for (int i = 0; i < 3; ++i) {
    Vector x(2);
    x << i, i * i;
    rows.push_back({x, i % 2 ? Label::Negative : Label::Positive});
  }
  rows.push_back({rows[0].features, Label::Positive});
  const auto pool = Dataset::from_instances({rows[0], rows[1], rows[2]}, Role::CamouflagePool);
  const auto secret = Dataset::from_instances(rows, Role::SecretSet);
  DetectorConfig det;
  det.sigma = 1.0;
  CamouflageProblem problem(pool, secret, 2, {}, det);
  RngState rng(2);
  const CandidateSet state({0, 2});
  const auto nbs = neighbors(state, problem, 5, rng);
  EXPECT_EQ(nbs.size(), 2u);
  for (const auto& nb : nbs) {
    std::vector<std::size_t> common;
    std::set_intersection(nb.indices().begin(), nb.indices().end(), state.indices().begin(), state.indices().end(),
                          std::back_inserter(common));
    EXPECT_EQ(common.size(), 1u);
    EXPECT_EQ(nb.size(), 2u);
  }
}

TEST(Neighbors, AllReturnedAreFeasible) {
  const auto pool = testing::trap_pool(9);
  const auto task = testing::small_task(10, 9);
  const auto det = calibrate_detector(pool);
  CamouflageProblem problem(pool, task.secret, testing::kTrapM, {}, det);
  // The feasible state with the most far points sits on the edge of the feasible region.
  const auto edge_state = [](std::size_t far) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < testing::kTrapM - far; ++i) idx.push_back(i);
    for (std::size_t i = 0; i < far; ++i) idx.push_back(testing::kTrapNear + i);
    return CandidateSet(idx);
  };
  std::size_t far = 0;
  while (far < testing::kTrapM && psi(pool, edge_state(far + 1), det).psi < 0.0) ++far;
  ASSERT_LT(far, testing::kTrapM);
  CandidateSet state = edge_state(far);
  ASSERT_TRUE(problem.feasible(state));
  RngState rng(3);
  std::size_t rejected = 0;
  const auto nbs = neighbors(state, problem, 40, rng, &rejected);
  for (auto nb : nbs) EXPECT_LT(psi(pool, nb, det).psi, 0.0);
  EXPECT_GT(rejected, 0u);
  EXPECT_EQ(problem.trainings(), 0u);
}

// ---- beam -------------------------------------------------------------------

TEST(SolveBeam, ZeroNeighborsReturnsBestInitialization) {
  auto inst = make_instance(30, 10);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 6, {}, inst.det);
  SolverBudget budget;
  budget.max_trainings = 1000;
  budget.beam_width = 4;
  budget.restarts = 3;
  budget.neighbors_per_state = 0;
  RngState rng(11);
  const auto report = solve_beam(problem, budget, rng);
  EXPECT_EQ(report.trainings_used, 12u);
  EXPECT_EQ(report.best_risk, report.initial_risk);
}

TEST(SolveBeam, BoundedByExhaustiveOptimumAndInitialization) {
  auto inst = make_instance(4, 12);
  const auto oracle = testing::exhaustive_optimum(inst.task.cover, inst.task.secret, 3, {}, inst.det);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 3, {}, inst.det);
  SolverBudget budget;
  budget.max_trainings = 300;
  budget.beam_width = 3;
  budget.restarts = 2;
  budget.neighbors_per_state = 5;
  RngState rng(13);
  const auto report = solve_beam(problem, budget, rng);
  EXPECT_GE(report.best_risk, oracle.min_risk - 1e-12);
  EXPECT_LE(report.best_risk, report.initial_risk);
  EXPECT_LE(report.trainings_used, 300u);
  expect_non_increasing(report);
}

TEST(SolveBeam, GreedyHillClimbIsMonotone) {
  auto inst = make_instance(40, 14);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 8, {}, inst.det);
  SolverBudget budget;
  budget.max_trainings = 200;
  budget.beam_width = 1;
  budget.restarts = 1;
  budget.neighbors_per_state = 10;
  RngState rng(15);
  const auto report = solve_beam(problem, budget, rng);
  expect_non_increasing(report);
  expect_feasible(inst.task.cover, report, inst.det);
  EXPECT_LE(report.best_risk, report.initial_risk);
}

TEST(SolveBeam, RemainderGoesToLastRestart) {
  auto inst = make_instance(40, 16);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 8, {}, inst.det);
  SolverBudget budget;
  budget.max_trainings = 103;
  budget.beam_width = 5;
  budget.restarts = 4;
  budget.neighbors_per_state = 20;
  RngState rng(17);
  const auto report = solve_beam(problem, budget, rng);
  EXPECT_EQ(report.trainings_used, 103u);
}

TEST(SolveBeam, FeasibleOnTrapPool) {
  const auto pool = testing::trap_pool(18);
  const auto task = testing::small_task(10, 18);
  const auto det = calibrate_detector(pool);
  CamouflageProblem problem(pool, task.secret, testing::kTrapM, {}, det);
  SolverBudget budget;
  budget.max_trainings = 200;
  budget.beam_width = 4;
  budget.neighbors_per_state = 10;
  RngState rng(19);
  const auto report = solve_beam(problem, budget, rng);
  expect_feasible(pool, report, det);
  EXPECT_LE(report.trainings_used, 200u);
}

// ---- relaxed program and rounding --------------------------------------------

TEST(ProjectCappedSimplex, ProducesFeasiblePoint) {
  RngState rng(20);
  for (int t = 0; t < 50; ++t) {
    Vector v(30);
    for (Eigen::Index i = 0; i < 30; ++i) v[i] = 3.0 * rng.normal();
    const double m = 1.0 + static_cast<double>(rng.uniform_index(29));
    const Vector p = project_capped_simplex(v, m);
    EXPECT_NEAR(p.sum(), m, 1e-9);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE(p.maxCoeff(), 1.0);
  }
}

TEST(RoundingCandidates, HandEnumeratedSwapSequence) {
  Vector b(4);
  b << 0.1, 0.9, 0.8, 0.2;
  const auto c = rounding_candidates(b, CandidateSet({0, 1}));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].indices(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(c[1].indices(), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(c[2].indices(), (std::vector<std::size_t>{2, 3}));
}

TEST(RoundingCandidates, TiesBreakByLowerIndex) {
  Vector b = Vector::Zero(6);
  b[1] = b[3] = b[4] = 1.0;
  const auto c = rounding_candidates(b, CandidateSet({1, 3, 4}));
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[0].indices(), (std::vector<std::size_t>{1, 3, 4}));
  EXPECT_EQ(c[1].indices(), (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(c[3].indices(), (std::vector<std::size_t>{0, 2, 5}));
}

// Property: m+1 candidates, the seed first, and the global top-m by b among them.
TEST(RoundingCandidates, ContainSeedAndTopM) {
  RngState rng(21);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 6 + rng.uniform_index(30);
    const std::size_t m = 1 + rng.uniform_index(n / 2);
    Vector b(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform01();
    const auto seed = sample_subset(n, m, rng);
    const auto c = rounding_candidates(b, seed);
    ASSERT_EQ(c.size(), m + 1);
    EXPECT_EQ(c.front(), seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto z) { return b[static_cast<Eigen::Index>(a)] > b[static_cast<Eigen::Index>(z)]; });
    const CandidateSet top(std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m)));
    EXPECT_NE(std::find(c.begin(), c.end(), top), c.end());
  }
}

TEST(SolveRelaxed, StationarySeedIsReturned) {
  auto inst = make_instance(5, 22);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 10, {}, inst.det);
  std::vector<std::size_t> all(10);
  for (std::size_t i = 0; i < 10; ++i) all[i] = i;
  RelaxedOptions opts;
  const auto sol = solve_relaxed(problem, CandidateSet(all), opts);
  EXPECT_LE((sol.b - Vector::Ones(10)).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(SolveRelaxed, DescentAndConstraints) {
  auto inst = make_instance(10, 23);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 5, {}, inst.det);
  RngState rng(24);
  const auto seed = sample_subset(inst.task.cover, 5, rng);
  RelaxedOptions opts;
  opts.max_trainings = 300;
  const auto sol = solve_relaxed(problem, seed, opts);
  EXPECT_LE(sol.risk, sol.seed_risk + 1e-9);
  EXPECT_NEAR(sol.b.sum(), 5.0, 1e-6);
  EXPECT_GE(sol.b.minCoeff(), -1e-9);
  EXPECT_LE(sol.b.maxCoeff(), 1.0 + 1e-9);
  EXPECT_LT(sol.psi_b, 0.0);
  EXPECT_LE(sol.stationarity_residual, LearnerConfig{}.tol);
}

// Finite-difference audit: moving along the projected-gradient direction
// decreases the penalized objective, at the rate the gradient predicts.
TEST(SolveRelaxed, ProjectedGradientDirectionDescends) {
  auto inst = make_instance(10, 25);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 5, {}, inst.det);
  RelaxedObjective objective(problem);
  RngState rng(26);
  const auto seed = sample_subset(inst.task.cover, 5, rng);
  Vector b = Vector::Zero(20);
  for (auto i : seed.indices()) b[static_cast<Eigen::Index>(i)] = 1.0;
  const double mu = 10.0;
  const auto p0 = objective.evaluate(b);
  const Vector g = objective.gradient(p0, mu);
  const Vector dir = project_capped_simplex(b - 0.5 / g.lpNorm<Eigen::Infinity>() * g, 5.0) - b;
  ASSERT_GT(dir.norm(), 0.0);
  const double slope = g.dot(dir);
  EXPECT_LT(slope, 0.0);
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const auto pt = objective.evaluate(b + t * dir);
    const double change = RelaxedObjective::penalized(pt, mu) - RelaxedObjective::penalized(p0, mu);
    EXPECT_LT(change, 0.0) << "t=" << t;
    if (t <= 1e-3) {
      EXPECT_NEAR(change / t, slope, 1e-2 * std::abs(slope) + 1e-3 * t);
    }
  }
}

TEST(SolveNlp, RoundingGuaranteeAndFeasibility) {
  auto inst = make_instance(25, 27);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 5, {}, inst.det);
  RngState rng(28);
  const auto seed = sample_subset(inst.task.cover, 5, rng);
  CandidateSet seed_eval = seed;
  const double seed_risk = problem.risk(seed_eval);
  RelaxedOptions opts;
  opts.max_trainings = 200;
  const auto report = solve_nlp(problem, seed, opts);
  EXPECT_LE(report.best_risk, seed_risk + 1e-9);
  EXPECT_EQ(report.candidates.size(), 6u);
  EXPECT_EQ(report.candidates.front(), seed);
  EXPECT_LE(report.trainings_used, 200u);
  expect_feasible(inst.task.cover, report, inst.det);
  expect_non_increasing(report);
}

TEST(SolveNlp, NeverBeatsExhaustiveOptimum) {
  auto inst = make_instance(4, 29);
  const auto oracle = testing::exhaustive_optimum(inst.task.cover, inst.task.secret, 3, {}, inst.det);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 3, {}, inst.det);
  RngState rng(30);
  RelaxedOptions opts;
  opts.max_trainings = 100;
  const auto report = solve_nlp(problem, sample_subset(inst.task.cover, 3, rng), opts);
  EXPECT_GE(report.best_risk, oracle.min_risk - 1e-12);
  EXPECT_LE(report.best_risk, report.initial_risk);
}

TEST(SolveNlp, RejectsTooSmallBudget) {
  auto inst = make_instance(10, 31);
  CamouflageProblem problem(inst.task.cover, inst.task.secret, 5, {}, inst.det);
  RelaxedOptions opts;
  opts.max_trainings = 6;
  EXPECT_THROW(solve_nlp(problem, CandidateSet({0, 1, 2, 3, 4}), opts), Error);
}

}  // namespace
}  // namespace camo
