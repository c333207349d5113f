#pragma once

#include <nlohmann/json.hpp>

#include "camo/core.hpp"
#include "camo/detector.hpp"
#include "camo/learner.hpp"
#include "camo/solvers/report.hpp"

namespace camo {

using json = nlohmann::json;

inline json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vector vector_from_json(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

inline void to_json(json& j, const ModelParams& p) { j = json{{"theta", vector_to_json(p.theta)}}; }
inline void from_json(const json& j, ModelParams& p) { p.theta = vector_from_json(j.at("theta")); }

inline void to_json(json& j, const CandidateSet& c) {
  j = json{{"indices", c.indices()}};
  if (c.cached_risk) j["risk"] = *c.cached_risk;
  if (c.cached_psi) j["psi"] = *c.cached_psi;
}

inline void to_json(json& j, const DetectionVerdict& v) {
  j = json{{"mmd", v.mmd_value}, {"threshold", v.threshold_T}, {"psi", v.psi}, {"suspicious", v.suspicious}};
}

inline void to_json(json& j, const DetectorConfig& c) {
  j = json{{"alpha", c.alpha}, {"sigma", c.sigma}, {"c", c.label_scale_c}, {"K", c.kernel_bound_K}};
}

inline void to_json(json& j, const LearnerConfig& c) {
  j = json{{"lambda", c.lambda}, {"tol", c.tol}, {"max_iter", c.max_iter}};
}

inline void from_json(const json& j, LearnerConfig& c) {
  c.lambda = j.value("lambda", c.lambda);
  c.tol = j.value("tol", c.tol);
  c.max_iter = j.value("max_iter", c.max_iter);
}

inline void to_json(json& j, const SolverBudget& b) {
  j = json{{"max_trainings", b.max_trainings},
           {"restarts", b.restarts},
           {"beam_width", b.beam_width},
           {"neighbors_per_state", b.neighbors_per_state},
           {"dedup", b.dedup}};
  if (b.wall_clock_limit_seconds) j["wall_clock_limit_seconds"] = *b.wall_clock_limit_seconds;
}

inline void from_json(const json& j, SolverBudget& b) {
  b.max_trainings = j.value("max_trainings", b.max_trainings);
  b.restarts = j.value("restarts", b.restarts);
  b.beam_width = j.value("beam_width", b.beam_width);
  b.neighbors_per_state = j.value("neighbors_per_state", b.neighbors_per_state);
  b.dedup = j.value("dedup", b.dedup);
  if (j.contains("wall_clock_limit_seconds")) b.wall_clock_limit_seconds = j.at("wall_clock_limit_seconds").get<double>();
}

inline void to_json(json& j, const RelaxedSolution& s) {
  j = json{{"b", vector_to_json(s.b)},
           {"theta", vector_to_json(s.theta.theta)},
           {"stationarity_residual", s.stationarity_residual},
           {"psi_b", s.psi_b},
           {"risk", s.risk},
           {"seed_risk", s.seed_risk},
           {"iterations", s.iterations},
           {"outer_rounds", s.outer_rounds},
           {"final_penalty_weight", s.final_penalty_weight}};
}

inline void to_json(json& j, const SolverReport& r) {
  json traj = json::array();
  for (const auto& p : r.trajectory) traj.push_back({p.trainings, p.best_risk});
  j = json{{"solver", r.solver_name},
           {"seed", r.seed},
           {"best", r.best},
           {"best_risk", r.best_risk},
           {"best_psi", r.best_psi},
           {"trainings_used", r.trainings_used},
           {"feasibility_rejections", r.feasibility_rejections},
           {"initial_risk", r.initial_risk},
           {"trajectory", traj}};
  if (!r.candidates.empty()) j["candidates"] = r.candidates;
  if (r.relaxed) j["relaxed"] = *r.relaxed;
}

}  // namespace camo
