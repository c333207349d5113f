#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace camo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary class label. Stored signed so that the logistic margin is y * <theta, x>.
enum class Label : int { Negative = -1, Positive = +1 };

inline constexpr double to_double(Label y) noexcept { return static_cast<int>(y); }

inline Label label_from_sign(int s) {
  if (s == 1) return Label::Positive;
  if (s == -1) return Label::Negative;
  throw Error("label must be -1 or +1, got " + std::to_string(s));
}

struct LabeledInstance {
  Vector features;
  Label label = Label::Positive;
};

enum class Role { CamouflagePool, SecretSet, TrainingSet, TestSet };

inline std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::CamouflagePool: return "camouflage_pool";
    case Role::SecretSet: return "secret_set";
    case Role::TrainingSet: return "training_set";
    case Role::TestSet: return "test_set";
  }
  return "unknown";
}

/// Immutable, ordered collection of labeled feature vectors sharing one dimension.
///
/// Features are kept as one row-major n x d matrix; row i is instance i for the
/// lifetime of the object. Pools and secret sets must be non-empty.
class Dataset {
 public:
  Dataset() = default;

  Dataset(Matrix features, Vector labels, Role role)
      : features_(std::move(features)), labels_(std::move(labels)), role_(role) {
    if (features_.rows() != labels_.size())
      throw Error("dataset: feature rows and label count differ");
    if (features_.rows() > 0 && features_.cols() == 0) throw Error("dataset: dimension must be positive");
    for (Eigen::Index i = 0; i < labels_.size(); ++i) {
      if (labels_[i] != 1.0 && labels_[i] != -1.0)
        throw Error("dataset: label at index " + std::to_string(i) + " is not in {-1,+1}");
    }
    if (features_.rows() == 0 && (role_ == Role::CamouflagePool || role_ == Role::SecretSet))
      throw Error("empty dataset");
  }

  static Dataset from_instances(const std::vector<LabeledInstance>& rows, Role role) {
    if (rows.empty()) return Dataset(Matrix(0, 0), Vector(0), role);
    const auto d = rows.front().features.size();
    Matrix x(static_cast<Eigen::Index>(rows.size()), d);
    Vector y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].features.size() != d)
        throw Error("dataset: instance " + std::to_string(i) + " has dimension " +
                    std::to_string(rows[i].features.size()) + ", expected " + std::to_string(d));
      x.row(static_cast<Eigen::Index>(i)) = rows[i].features.transpose();
      y[static_cast<Eigen::Index>(i)] = to_double(rows[i].label);
    }
    return Dataset(std::move(x), std::move(y), role);
  }

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  [[nodiscard]] bool empty() const noexcept { return size() == 0; }
  [[nodiscard]] Eigen::Index dimension() const noexcept { return features_.cols(); }
  [[nodiscard]] Role role() const noexcept { return role_; }

  [[nodiscard]] const Matrix& features() const noexcept { return features_; }
  [[nodiscard]] const Vector& labels() const noexcept { return labels_; }
  [[nodiscard]] double label(std::size_t i) const { return labels_[static_cast<Eigen::Index>(i)]; }
  [[nodiscard]] auto row(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)); }

  [[nodiscard]] LabeledInstance instance(std::size_t i) const {
    return {features_.row(static_cast<Eigen::Index>(i)).transpose(),
            labels_[static_cast<Eigen::Index>(i)] > 0 ? Label::Positive : Label::Negative};
  }

  /// Copies the listed rows, in the given order, into a new dataset.
  [[nodiscard]] Dataset subset(const std::vector<std::size_t>& indices, Role role) const {
    Matrix x(static_cast<Eigen::Index>(indices.size()), dimension());
    Vector y(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] >= size()) throw Error("dataset: subset index out of range");
      x.row(static_cast<Eigen::Index>(k)) = features_.row(static_cast<Eigen::Index>(indices[k]));
      y[static_cast<Eigen::Index>(k)] = labels_[static_cast<Eigen::Index>(indices[k])];
    }
    return Dataset(std::move(x), std::move(y), role);
  }

  [[nodiscard]] Dataset with_role(Role role) const { return Dataset(features_, labels_, role); }

 private:
  Matrix features_{0, 0};
  Vector labels_{0};
  Role role_ = Role::TrainingSet;
};

/// An m-subset of a camouflage pool, by strictly increasing index.
///
/// `risk` and `psi` are caches filled by the objective evaluator; they are
/// cleared whenever the index set changes.
class CandidateSet {
 public:
  CandidateSet() = default;

  explicit CandidateSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
      throw Error("candidate set: duplicate index");
  }

  [[nodiscard]] const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  [[nodiscard]] std::size_t size() const noexcept { return indices_.size(); }
  [[nodiscard]] bool contains(std::size_t i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
  }

  void validate(std::size_t pool_size) const {
    if (!indices_.empty() && indices_.back() >= pool_size)
      throw Error("candidate set: index " + std::to_string(indices_.back()) + " out of range for pool of " +
                  std::to_string(pool_size));
  }

  std::optional<double> cached_risk;
  std::optional<double> cached_psi;

  friend bool operator==(const CandidateSet& a, const CandidateSet& b) { return a.indices_ == b.indices_; }
  friend bool operator<(const CandidateSet& a, const CandidateSet& b) { return a.indices_ < b.indices_; }

 private:
  std::vector<std::size_t> indices_;
};

}  // namespace camo
