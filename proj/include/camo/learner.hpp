#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "camo/core.hpp"

namespace camo {

struct ModelParams {
  Vector theta;
};

struct LearnerConfig {
  double lambda = 1.0;
  /// Bound on the 2-norm of the stationarity residual.
  double tol = 1e-8;
  int max_iter = 100;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error("learner: lambda must be > 0");
    if (!(tol > 0.0)) throw Error("learner: tol must be > 0");
    if (max_iter < 1) throw Error("learner: max_iter must be >= 1");
  }
};

/// A pool with per-instance weights b in [0,1]^n, sum(b) > 0.
class WeightedTrainingView {
 public:
  WeightedTrainingView(const Dataset& pool, Vector weights) : pool_(&pool), weights_(std::move(weights)) {
    if (weights_.size() != static_cast<Eigen::Index>(pool.size()))
      throw Error("weighted view: weight count does not match pool size");
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] >= 0.0 && weights_[i] <= 1.0))
        throw Error("weighted view: weight " + std::to_string(i) + " outside [0,1]");
    }
    if (!(weights_.sum() > 0.0)) throw Error("weighted view: weights sum to zero");
  }

  /// Binary weights selecting the listed indices.
  static WeightedTrainingView indicator(const Dataset& pool, const CandidateSet& set) {
    Vector b = Vector::Zero(static_cast<Eigen::Index>(pool.size()));
    set.validate(pool.size());
    for (auto i : set.indices()) b[static_cast<Eigen::Index>(i)] = 1.0;
    return {pool, std::move(b)};
  }

  static WeightedTrainingView all(const Dataset& pool) {
    return {pool, Vector::Ones(static_cast<Eigen::Index>(pool.size()))};
  }

  [[nodiscard]] const Dataset& pool() const noexcept { return *pool_; }
  [[nodiscard]] const Vector& weights() const noexcept { return weights_; }

 private:
  const Dataset* pool_;
  Vector weights_;
};

/// Raised when training fails to reach the stationarity tolerance.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

namespace detail {

/// log(1 + exp(t)), finite for every finite t.
inline double softplus(double t) noexcept { return t > 30.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

/// 1 / (1 + exp(-t)).
inline double sigmoid(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace detail

/// log(1 + exp(-y <theta, x>)), natural log.
template <typename Derived>
double logistic_loss(const Vector& theta, const Eigen::MatrixBase<Derived>& x, double y) {
  return detail::softplus(-y * theta.dot(x.derived().transpose()));
}

inline double logistic_loss(const ModelParams& m, const LabeledInstance& inst) {
  if (m.theta.size() != inst.features.size()) throw Error("logistic_loss: dimension mismatch");
  return logistic_loss(m.theta, inst.features.transpose(), to_double(inst.label));
}

/// Gradient of the logistic loss with respect to theta: -y * sigmoid(-y <theta,x>) * x.
inline Vector logistic_loss_gradient(const Vector& theta, const Vector& x, double y) {
  return (-y * detail::sigmoid(-y * theta.dot(x))) * x;
}

/// Mean logistic loss over `data`.
inline double empirical_risk(const Vector& theta, const Dataset& data) {
  if (data.empty()) throw Error("empirical_risk: empty dataset");
  if (theta.size() != data.dimension()) throw Error("empirical_risk: dimension mismatch");
  const Vector margins = (data.features() * theta).cwiseProduct(data.labels());
  double total = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) total += detail::softplus(-margins[i]);
  return total / static_cast<double>(data.size());
}

inline double empirical_risk(const ModelParams& m, const Dataset& data) { return empirical_risk(m.theta, data); }

/// Gradient of empirical_risk with respect to theta.
inline Vector risk_gradient(const Vector& theta, const Dataset& data) {
  const Vector margins = (data.features() * theta).cwiseProduct(data.labels());
  Vector coef(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) coef[i] = -data.labels()[i] * detail::sigmoid(-margins[i]);
  return data.features().transpose() * coef / static_cast<double>(data.size());
}

/// Fraction of misclassified instances. sign(0) predicts +1.
inline double predict_error(const Vector& theta, const Dataset& data) {
  if (data.empty()) throw Error("predict_error: empty dataset");
  if (theta.size() != data.dimension()) throw Error("predict_error: dimension mismatch");
  const Vector scores = data.features() * theta;
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double predicted = scores[i] >= 0.0 ? 1.0 : -1.0;
    if (predicted != data.labels()[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

inline double predict_error(const ModelParams& m, const Dataset& data) { return predict_error(m.theta, data); }

/// Weighted regularized objective sum_i b_i l_i(theta) + lambda/2 |theta|^2 and its derivatives.
struct TrainingObjective {
  const WeightedTrainingView& view;
  double lambda;

  [[nodiscard]] double value(const Vector& theta) const {
    const auto& pool = view.pool();
    const Vector margins = (pool.features() * theta).cwiseProduct(pool.labels());
    double total = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      const double b = view.weights()[i];
      if (b != 0.0) total += b * detail::softplus(-margins[i]);
    }
    return total + 0.5 * lambda * theta.squaredNorm();
  }

  /// Gradient (stationarity residual) and the Hessian including lambda I.
  void derivatives(const Vector& theta, Vector& grad, Eigen::MatrixXd& hess) const {
    const auto& pool = view.pool();
    const Vector margins = (pool.features() * theta).cwiseProduct(pool.labels());
    Vector coef(margins.size());
    Vector curv(margins.size());
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
      const double b = view.weights()[i];
      const double s = detail::sigmoid(-margins[i]);
      coef[i] = -b * pool.labels()[i] * s;
      curv[i] = b * s * (1.0 - s);
    }
    grad = pool.features().transpose() * coef + lambda * theta;
    hess = pool.features().transpose() * curv.asDiagonal() * pool.features();
    hess.diagonal().array() += lambda;
  }
};

/// Stationarity residual |sum_i b_i grad l_i(theta) + lambda theta|_2.
inline double stationarity_residual(const WeightedTrainingView& view, const LearnerConfig& cfg, const Vector& theta) {
  Vector g;
  Eigen::MatrixXd h;
  TrainingObjective{view, cfg.lambda}.derivatives(theta, g, h);
  return g.norm();
}

/// Regularized weighted logistic regression by damped Newton from theta = 0
/// (or `start`). Deterministic; the objective is strongly convex for lambda > 0.
inline ModelParams train(const WeightedTrainingView& view, const LearnerConfig& cfg,
                         const std::optional<Vector>& start = std::nullopt) {
  cfg.validate();
  const Eigen::Index d = view.pool().dimension();
  Vector theta = start ? *start : Vector::Zero(d);
  if (theta.size() != d) throw Error("train: start dimension mismatch");

  const TrainingObjective objective{view, cfg.lambda};
  Vector grad;
  Eigen::MatrixXd hess;
  double f = objective.value(theta);
  double residual = 0.0;
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    objective.derivatives(theta, grad, hess);
    residual = grad.norm();
    if (!std::isfinite(residual)) throw TrainingError("train: diverged", residual);
    if (residual <= cfg.tol) return {theta};

    const Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success) throw TrainingError("train: Hessian factorization failed", residual);
    const Vector step = -llt.solve(grad);
    const double slope = grad.dot(step);

    // Armijo backtracking. Once the Newton decrement is below the roundoff in f
    // the decrease test is noise, so the full step is taken unconditionally.
    double t = 1.0;
    Vector trial = theta + step;
    double f_trial = objective.value(trial);
    const bool at_roundoff = -slope <= 1e-12 * (1.0 + std::abs(f));
    while (!at_roundoff && f_trial > f + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      trial = theta + t * step;
      f_trial = objective.value(trial);
    }
    if (t <= 1e-12) {
      // Roundoff floor: the decrease condition cannot be certified, take the Newton step anyway.
      trial = theta + step;
      f_trial = objective.value(trial);
    }
    theta = std::move(trial);
    f = f_trial;
  }
  objective.derivatives(theta, grad, hess);
  residual = grad.norm();
  if (residual <= cfg.tol) return {theta};
  throw TrainingError("train: no convergence after " + std::to_string(cfg.max_iter) +
                          " iterations (residual " + std::to_string(residual) + ")",
                      residual);
}

/// d/db_i of the secret-set risk at theta_hat(b), by implicit differentiation of
/// the stationarity condition: (H + lambda I) u = -grad_theta risk, g_i = <u, grad l_i>.
inline Vector risk_gradient_wrt_weights(const WeightedTrainingView& view, const LearnerConfig& cfg,
                                        const Dataset& secret, const Vector& theta) {
  const TrainingObjective objective{view, cfg.lambda};
  Vector grad;
  Eigen::MatrixXd hess;
  objective.derivatives(theta, grad, hess);
  const Eigen::LLT<Eigen::MatrixXd> llt(hess);
  if (llt.info() != Eigen::Success) throw Error("risk_gradient_wrt_weights: linear solve failed");
  const Vector u = llt.solve(-risk_gradient(theta, secret));

  const auto& pool = view.pool();
  const Vector margins = (pool.features() * theta).cwiseProduct(pool.labels());
  const Vector proj = pool.features() * u;
  Vector g(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i)
    g[i] = -pool.labels()[i] * detail::sigmoid(-margins[i]) * proj[i];
  return g;
}

inline Vector risk_gradient_wrt_weights(const WeightedTrainingView& view, const LearnerConfig& cfg,
                                        const Dataset& secret) {
  return risk_gradient_wrt_weights(view, cfg, secret, train(view, cfg).theta);
}

}  // namespace camo
