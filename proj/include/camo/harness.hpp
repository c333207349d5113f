#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "camo/dataset_io.hpp"
#include "camo/detector.hpp"
#include "camo/json_io.hpp"
#include "camo/learner.hpp"
#include "camo/objective.hpp"
#include "camo/rng.hpp"
#include "camo/solvers/beam.hpp"
#include "camo/solvers/nlp.hpp"
#include "camo/solvers/uniform.hpp"

namespace camo {

enum class SolverKind { Uniform, Beam, Nlp };

inline std::string_view to_string(SolverKind k) {
  switch (k) {
    case SolverKind::Uniform: return "uniform";
    case SolverKind::Beam: return "beam";
    case SolverKind::Nlp: return "nlp";
  }
  return "unknown";
}

inline SolverKind solver_from_string(std::string_view s) {
  if (s == "uniform") return SolverKind::Uniform;
  if (s == "beam") return SolverKind::Beam;
  if (s == "nlp") return SolverKind::Nlp;
  throw Error("unknown solver '" + std::string(s) + "' (expected uniform, beam or nlp)");
}

/// Sub-seed stages; stage k draws from RngState(seed).split(k).
enum class Stage : std::uint64_t { Split = 0, Selection = 1, Solver = 2, RandomBaseline = 3 };

struct ExperimentConfig {
  std::string secret_path;
  std::optional<std::string> secret_test_path;
  /// Fraction of the secret file held out for testing when no test file is given.
  double test_fraction = 0.2;
  std::vector<std::string> cover_paths;
  std::size_t m = 20;
  SolverKind solver = SolverKind::Beam;
  SolverBudget budget;
  /// Total cover-selection budget, split equally across cover candidates.
  std::size_t selection_budget = 1000;
  std::size_t nlp_max_inner_iterations = 50;
  LearnerConfig learner;
  double alpha = 0.05;
  std::size_t random_trials = 20;
  std::uint64_t seed = 0;
  std::map<std::string, int> label_map{{"1", +1}, {"+1", +1}, {"-1", -1}};
  bool append_bias = false;

  void validate() const {
    if (cover_paths.empty()) throw Error("config: at least one cover pool is required");
    if (m < 1) throw Error("config: m must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("config: test_fraction must lie in (0,1)");
    if (random_trials < 1) throw Error("config: random_trials must be >= 1");
    if (selection_budget < cover_paths.size()) throw Error("config: selection_budget smaller than candidate count");
    budget.validate();
    learner.validate();
  }
};

inline void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"secret_path", c.secret_path},
           {"test_fraction", c.test_fraction},
           {"cover_paths", c.cover_paths},
           {"m", c.m},
           {"solver", to_string(c.solver)},
           {"budget", c.budget},
           {"selection_budget", c.selection_budget},
           {"nlp_max_inner_iterations", c.nlp_max_inner_iterations},
           {"learner", c.learner},
           {"alpha", c.alpha},
           {"random_trials", c.random_trials},
           {"seed", c.seed},
           {"label_map", c.label_map},
           {"append_bias", c.append_bias}};
  if (c.secret_test_path) j["secret_test_path"] = *c.secret_test_path;
}

inline void from_json(const json& j, ExperimentConfig& c) {
  c.secret_path = j.at("secret_path").get<std::string>();
  if (j.contains("secret_test_path")) c.secret_test_path = j.at("secret_test_path").get<std::string>();
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.cover_paths = j.at("cover_paths").get<std::vector<std::string>>();
  c.m = j.at("m").get<std::size_t>();
  c.solver = solver_from_string(j.value("solver", std::string("beam")));
  if (j.contains("budget")) c.budget = j.at("budget").get<SolverBudget>();
  c.selection_budget = j.value("selection_budget", c.selection_budget);
  c.nlp_max_inner_iterations = j.value("nlp_max_inner_iterations", c.nlp_max_inner_iterations);
  if (j.contains("learner")) c.learner = j.at("learner").get<LearnerConfig>();
  c.alpha = j.value("alpha", c.alpha);
  c.random_trials = j.value("random_trials", c.random_trials);
  c.seed = j.value("seed", c.seed);
  if (j.contains("label_map")) c.label_map = j.at("label_map").get<std::map<std::string, int>>();
  c.append_bias = j.value("append_bias", c.append_bias);
}

/// Reads a run config; a manifest written by a previous run is accepted too.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config '" + path + "': " + e.what());
  }
  const json& body = j.contains("config") ? j.at("config") : j;
  try {
    return body.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw Error("config '" + path + "': " + e.what());
  }
}

struct CoverSelection {
  std::size_t chosen = 0;
  CandidateSet set;
  DetectorConfig detector;
  /// Best secret risk per candidate; nullopt when a candidate had no feasible set.
  std::vector<std::optional<double>> risks;
};

/// Runs uniform sampling on every cover candidate with floor(B_total / #candidates)
/// trainings each and picks the lowest secret risk (first candidate on ties).
inline CoverSelection select_cover_task(const Dataset& secret, const std::vector<Dataset>& candidates, std::size_t m,
                                        std::size_t total_budget, const LearnerConfig& cfg, double alpha,
                                        RngState& rng) {
  if (candidates.empty()) throw Error("select_cover_task: no candidates");
  SolverBudget budget;
  budget.max_trainings = std::max<std::size_t>(1, total_budget / candidates.size());

  CoverSelection out;
  std::optional<double> best;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    RngState child = rng.split(k);
    try {
      const DetectorConfig det = calibrate_detector(candidates[k], alpha);
      CamouflageProblem problem(candidates[k], secret, m, cfg, det);
      auto report = solve_uniform(problem, budget, child);
      out.risks.push_back(report.best_risk);
      if (!best || report.best_risk < *best) {
        best = report.best_risk;
        out.chosen = k;
        out.set = report.best;
        out.detector = det;
      }
    } catch (const TrainingError&) {
      throw;
    } catch (const Error&) {
      out.risks.push_back(std::nullopt);
    }
  }
  if (!best) throw Error("select_cover_task: every candidate cover task is infeasible");
  return out;
}

struct BaselineStats {
  double mean = 0.0;
  double std_dev = 0.0;
};

/// Test error of Bob trained on `trials` uniform m-subsets of the pool, with no
/// detector filtering. std_dev is the population standard deviation.
inline BaselineStats random_baseline(const Dataset& pool, const Dataset& secret_test, std::size_t m,
                                     std::size_t trials, const LearnerConfig& cfg, RngState& rng) {
  if (trials < 1) throw Error("random_baseline: trials must be >= 1");
  std::vector<double> errors;
  errors.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto idx = sample_subset(pool.size(), m, rng);
    const auto model = train(WeightedTrainingView::all(pool.subset(idx.indices(), Role::TrainingSet)), cfg);
    errors.push_back(predict_error(model, secret_test));
  }
  BaselineStats s;
  for (double e : errors) s.mean += e;
  s.mean /= static_cast<double>(trials);
  for (double e : errors) s.std_dev += (e - s.mean) * (e - s.mean);
  s.std_dev = std::sqrt(s.std_dev / static_cast<double>(trials));
  return s;
}

/// Test error of Bob trained directly on the secret training set.
inline double oracle_baseline(const Dataset& secret_train, const Dataset& secret_test, const LearnerConfig& cfg) {
  if (secret_train.empty() || secret_test.empty()) throw Error("oracle_baseline: empty dataset");
  return predict_error(train(WeightedTrainingView::all(secret_train), cfg), secret_test);
}

struct EvaluationRow {
  double solver_test_error = 0.0;
  double random_mean = 0.0;
  double random_std = 0.0;
  double oracle_error = 0.0;
  double secret_risk = 0.0;
  std::size_t chosen_cover = 0;
  double psi = 0.0;
};

inline void to_json(json& j, const EvaluationRow& r) {
  j = json{{"solver_test_error", r.solver_test_error},
           {"random_test_error_mean", r.random_mean},
           {"random_test_error_std", r.random_std},
           {"oracle_test_error", r.oracle_error},
           {"secret_risk", r.secret_risk},
           {"chosen_cover", r.chosen_cover},
           {"psi", r.psi}};
}

/// A run failure tagged with the protocol stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct ExperimentOutcome {
  EvaluationRow row;
  SolverReport report;
  ModelParams model;
  CandidateSet chosen;
  json manifest;
};

/// The evaluation protocol on in-memory data: cover selection by uniform
/// sampling, the configured solver on the chosen pool, a recomputed detector
/// check on the delivered set, then solver / random / oracle test errors.
///
/// `manifest` is filled as stages complete, so it is meaningful even if a later
/// stage throws.
inline ExperimentOutcome run_protocol(const Dataset& secret_train, const Dataset& secret_test,
                                      const std::vector<Dataset>& covers, const ExperimentConfig& cfg,
                                      json& manifest) {
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  const RngState root(cfg.seed);
  std::string stage = "selection";
  ExperimentOutcome out;
  try {
    auto t0 = clock::now();
    RngState sel_rng = root.split(static_cast<std::uint64_t>(Stage::Selection));
    auto selection = select_cover_task(secret_train, covers, cfg.m, cfg.selection_budget, cfg.learner, cfg.alpha, sel_rng);
    json risks = json::array();
    for (const auto& r : selection.risks) risks.push_back(r ? json(*r) : json(nullptr));
    manifest["selection"] = {{"chosen", selection.chosen},
                             {"risks", risks},
                             {"seed_set", selection.set},
                             {"seed", sel_rng.seed()}};
    manifest["timings_ms"]["selection"] = ms_since(t0);

    stage = "solver";
    t0 = clock::now();
    const Dataset& pool = covers[selection.chosen];
    const DetectorConfig det = selection.detector;
    manifest["detector"] = det;
    CamouflageProblem problem(pool, secret_train, cfg.m, cfg.learner, det);
    manifest["detector"]["T"] = problem.threshold();
    RngState solver_rng = root.split(static_cast<std::uint64_t>(Stage::Solver));
    switch (cfg.solver) {
      case SolverKind::Uniform: out.report = solve_uniform(problem, cfg.budget, solver_rng); break;
      case SolverKind::Beam: out.report = solve_beam(problem, cfg.budget, solver_rng); break;
      case SolverKind::Nlp: {
        RelaxedOptions opts;
        opts.max_trainings = cfg.budget.max_trainings;
        opts.max_inner_iterations = cfg.nlp_max_inner_iterations;
        opts.wall_clock_limit_seconds = cfg.budget.wall_clock_limit_seconds;
        out.report = solve_nlp(problem, selection.set, opts);
        out.report.seed = solver_rng.seed();
        break;
      }
    }
    manifest["solver_report"] = out.report;
    manifest["timings_ms"]["solver"] = ms_since(t0);

    stage = "verification";
    const auto verdict = psi(pool, out.report.best, det);
    manifest["verdict"] = verdict;
    if (!verdict.feasible()) throw Error("delivered set is flagged by the detector (psi = " + std::to_string(verdict.psi) + ")");
    out.chosen = out.report.best;

    stage = "evaluation";
    t0 = clock::now();
    out.model = train(WeightedTrainingView::all(pool.subset(out.chosen.indices(), Role::TrainingSet)), cfg.learner);
    RngState base_rng = root.split(static_cast<std::uint64_t>(Stage::RandomBaseline));
    const auto random = random_baseline(pool, secret_test, cfg.m, cfg.random_trials, cfg.learner, base_rng);
    out.row.solver_test_error = predict_error(out.model, secret_test);
    out.row.random_mean = random.mean;
    out.row.random_std = random.std_dev;
    out.row.oracle_error = oracle_baseline(secret_train, secret_test, cfg.learner);
    out.row.secret_risk = empirical_risk(out.model, secret_train);
    out.row.chosen_cover = selection.chosen;
    out.row.psi = verdict.psi;
    manifest["timings_ms"]["evaluation"] = ms_since(t0);
    manifest["result"] = out.row;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    manifest["error"] = {{"stage", stage}, {"message", e.what()}};
    throw StageError(stage, e.what());
  }
  out.manifest = manifest;
  return out;
}

namespace detail {

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << j.dump(2) << '\n';
}

}  // namespace detail

/// File-driven run: loads datasets, runs the protocol, and writes
/// manifest.json, result.json, chosen_set.json (and model.json when asked)
/// under `out_dir`. The manifest is written even when a stage fails.
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                        bool dump_model = false) {
  std::filesystem::create_directories(out_dir);
  json manifest;
  manifest["config"] = cfg;
  manifest["seed"] = cfg.seed;
  manifest["stage_seeds"] = {{"split", derive_seed(cfg.seed, 0)},
                             {"selection", derive_seed(cfg.seed, 1)},
                             {"solver", derive_seed(cfg.seed, 2)},
                             {"random_baseline", derive_seed(cfg.seed, 3)}};
  auto fail = [&](const std::string& stage, const std::string& what) {
    manifest["error"] = {{"stage", stage}, {"message", what}};
    detail::write_json_file(out_dir / "manifest.json", manifest);
    throw StageError(stage, what);
  };

  Dataset secret_train, secret_test;
  std::vector<Dataset> covers;
  try {
    cfg.validate();
    LoadOptions secret_opts;
    secret_opts.label_map = cfg.label_map;
    secret_opts.append_bias = cfg.append_bias;
    secret_opts.role = Role::SecretSet;
    const Dataset secret = load_dataset(cfg.secret_path, secret_opts);
    if (cfg.secret_test_path) {
      LoadOptions test_opts = secret_opts;
      test_opts.role = Role::TestSet;
      secret_train = secret;
      secret_test = load_dataset(*cfg.secret_test_path, test_opts);
    } else {
      RngState split_rng = RngState(cfg.seed).split(static_cast<std::uint64_t>(Stage::Split));
      auto parts = split_train_test(secret, 1.0 - cfg.test_fraction, split_rng);
      secret_train = std::move(parts.first);
      secret_test = std::move(parts.second);
      if (secret_test.empty()) throw Error("held-out secret test set is empty");
    }
    LoadOptions cover_opts = secret_opts;
    cover_opts.role = Role::CamouflagePool;
    for (const auto& p : cfg.cover_paths) covers.push_back(load_dataset(p, cover_opts));
  } catch (const std::exception& e) {
    fail("load", e.what());
  }

  ExperimentOutcome out;
  try {
    out = run_protocol(secret_train, secret_test, covers, cfg, manifest);
  } catch (const StageError& e) {
    detail::write_json_file(out_dir / "manifest.json", manifest);
    throw;
  }

  manifest["artifacts"] = {"manifest.json", "result.json", "chosen_set.json"};
  if (dump_model) manifest["artifacts"].push_back("model.json");
  out.manifest = manifest;
  detail::write_json_file(out_dir / "result.json", json(out.row));
  detail::write_json_file(out_dir / "chosen_set.json",
                          json{{"cover", out.row.chosen_cover},
                               {"cover_path", cfg.cover_paths[out.row.chosen_cover]},
                               {"indices", out.chosen.indices()}});
  if (dump_model) detail::write_json_file(out_dir / "model.json", json(out.model));
  detail::write_json_file(out_dir / "manifest.json", manifest);
  return out;
}

}  // namespace camo
