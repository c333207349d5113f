#include <array>
#include <filesystem>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "camo/camo.hpp"
#include "test_support.hpp"

namespace camo {
namespace {

Dataset parse(const std::string& text, FileFormat fmt = FileFormat::Csv, LoadOptions opts = {}) {
  std::istringstream in(text);
  return read_dataset(in, fmt, opts);
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(LoadDataset, ParsesThreeRowCsv) {
  const auto d = parse("f0,f1,label\n0.5,1,1\n-2,3.25,-1\n1e-3,0,+1\n");
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.dimension(), 2);
  EXPECT_EQ(d.label(0), 1.0);
  EXPECT_EQ(d.label(1), -1.0);
  EXPECT_EQ(d.label(2), 1.0);
  EXPECT_DOUBLE_EQ(d.row(1)[1], 3.25);
}

TEST(LoadDataset, RejectsEmptyInput) {
  EXPECT_EQ(error_of([] { parse(""); }), "empty dataset");
  EXPECT_EQ(error_of([] { parse("f0,label\n"); }), "empty dataset");
}

TEST(LoadDataset, DimensionMismatchNamesRow) {
  const auto msg = error_of([] { parse("f0,f1,label\n1,2,1\n1,2,3,-1\n"); });
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
}

TEST(LoadDataset, RejectsUnknownLabel) {
  const auto msg = error_of([] { parse("f0,label\n1,1\n2,0\n"); });
  EXPECT_NE(msg.find("unknown label"), std::string::npos) << msg;
}

TEST(LoadDataset, ExplicitClassNameMapping) {
  LoadOptions opts;
  opts.label_map = {{"orange", +1}, {"apple", -1}};
  const auto d = parse("f0,label\n1,orange\n2,apple\n", FileFormat::Csv, opts);
  EXPECT_EQ(d.label(0), 1.0);
  EXPECT_EQ(d.label(1), -1.0);
}

TEST(LoadDataset, AppendsBiasColumnOnRequest) {
  LoadOptions opts;
  opts.append_bias = true;
  const auto d = parse("f0,label\n7,1\n", FileFormat::Csv, opts);
  ASSERT_EQ(d.dimension(), 2);
  EXPECT_EQ(d.row(0)[1], 1.0);
}

TEST(LoadDataset, ParsesJsonl) {
  const auto d = parse("{\"features\":[1,2],\"label\":1}\n\n{\"features\":[3,4.5],\"label\":\"-1\"}\n", FileFormat::Jsonl);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.row(1)[1], 4.5);
  EXPECT_EQ(d.label(1), -1.0);
  const auto msg = error_of([] { parse("{\"features\":[1],\"label\":1}\n{\"features\":[1,2],\"label\":1}\n", FileFormat::Jsonl); });
  EXPECT_NE(msg.find("row 2"), std::string::npos);
}

TEST(LoadDataset, RejectsEmptyPoolRole) {
  EXPECT_THROW(Dataset(Matrix(0, 2), Vector(0), Role::CamouflagePool), Error);
  EXPECT_NO_THROW(Dataset(Matrix(0, 2), Vector(0), Role::TestSet));
}

// Save/load reproduces features bit-exactly for both formats.
TEST(DatasetIo, RoundTripIsBitExact) {
  RngState rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = 1 + rng.uniform_index(30);
    const auto d = 1 + rng.uniform_index(6);
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Vector y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        x(i, j) = std::ldexp(rng.normal(), static_cast<int>(rng.uniform_index(80)) - 40);
      y[i] = rng.uniform_index(2) ? 1.0 : -1.0;
    }
    const Dataset data(x, y, Role::CamouflagePool);
    for (auto fmt : {FileFormat::Csv, FileFormat::Jsonl}) {
      std::stringstream buf;
      write_dataset(buf, data, fmt);
      const auto back = read_dataset(buf, fmt);
      ASSERT_EQ(back.size(), data.size());
      EXPECT_TRUE((back.features().array() == data.features().array()).all());
      EXPECT_TRUE((back.labels().array() == data.labels().array()).all());
    }
  }
}

Dataset indexed(std::size_t n) {
  Matrix x(static_cast<Eigen::Index>(n), 1);
  Vector y = Vector::Ones(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
  return Dataset(x, y, Role::SecretSet);
}

TEST(SplitTrainTest, SizesAndDisjointness) {
  RngState rng(5);
  const auto [a, b] = split_train_test(indexed(10), 0.8, rng);
  EXPECT_EQ(a.size(), 8u);
  EXPECT_EQ(b.size(), 2u);
  std::vector<double> all;
  for (std::size_t i = 0; i < a.size(); ++i) all.push_back(a.row(i)[0]);
  for (std::size_t i = 0; i < b.size(); ++i) all.push_back(b.row(i)[0]);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(all[i], static_cast<double>(i));
  EXPECT_EQ(b.role(), Role::TestSet);
}

TEST(SplitTrainTest, DeterministicUnderSeed) {
  RngState r1(99), r2(99);
  const auto s1 = split_train_test(indexed(50), 0.3, r1);
  const auto s2 = split_train_test(indexed(50), 0.3, r2);
  EXPECT_TRUE((s1.first.features().array() == s2.first.features().array()).all());
}

TEST(SplitTrainTest, CeilingRuleOnSingleton) {
  RngState rng(1);
  const auto [a, b] = split_train_test(indexed(1), 0.5, rng);
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(b.size(), 0u);
}

TEST(SplitTrainTest, RejectsBadFraction) {
  RngState rng(1);
  EXPECT_THROW(split_train_test(indexed(4), 0.0, rng), Error);
  EXPECT_THROW(split_train_test(indexed(4), 1.0, rng), Error);
}

TEST(SampleSubset, FullPoolIsForced) {
  RngState rng(3);
  const auto c = sample_subset(5, 5, rng);
  EXPECT_EQ(c.indices(), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(SampleSubset, EmptyAndOversized) {
  RngState rng(3);
  EXPECT_EQ(sample_subset(5, 0, rng).size(), 0u);
  EXPECT_THROW(sample_subset(3, 4, rng), Error);
}

// Each of the 6 pairs of {0..3} should appear with frequency 1/6; the band is
// three binomial standard deviations.
TEST(SampleSubset, PairsAreUniform) {
  RngState rng(2024);
  constexpr int draws = 100000;
  std::map<std::vector<std::size_t>, int> counts;
  for (int i = 0; i < draws; ++i) ++counts[sample_subset(4, 2, rng).indices()];
  ASSERT_EQ(counts.size(), 6u);
  const double p = 1.0 / 6.0;
  const double sd = std::sqrt(p * (1 - p) / draws);
  for (const auto& [pair, c] : counts) EXPECT_NEAR(static_cast<double>(c) / draws, p, 3 * sd);
}

TEST(RngState, ReplayIsBitIdentical) {
  RngState a(77), b(77);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
    ASSERT_EQ(a.normal(), b.normal());
    ASSERT_EQ(a.uniform_index(17), b.uniform_index(17));
  }
  EXPECT_EQ(a.position(), b.position());
  EXPECT_EQ(a.split(3).seed(), b.split(3).seed());
  EXPECT_NE(a.split(3).seed(), a.split(4).seed());
  EXPECT_EQ(a.split(3).seed(), derive_seed(77, 3));
}

TEST(CandidateSet, SortsAndRejectsDuplicates) {
  EXPECT_EQ(CandidateSet({4, 1, 3}).indices(), (std::vector<std::size_t>{1, 3, 4}));
  EXPECT_THROW(CandidateSet({1, 1}), Error);
  EXPECT_THROW(CandidateSet({7}).validate(5), Error);
}

// Cached psi/risk on a candidate equal recomputation from scratch.
TEST(CandidateSet, CacheCoherence) {
  const auto task = testing::small_task(30, 8);
  const auto det = calibrate_detector(task.cover);
  CamouflageProblem problem(task.cover, task.secret, 6, LearnerConfig{}, det);
  RngState rng(4);
  for (int t = 0; t < 30; ++t) {
    auto c = sample_subset(task.cover, 6, rng);
    problem.psi(c);
    problem.risk(c);
    const auto fresh_psi = psi(task.cover, c, det).psi;
    const Dataset d = task.cover.subset(c.indices(), Role::TrainingSet);
    const auto fresh_risk = empirical_risk(train(WeightedTrainingView::all(d), LearnerConfig{}), task.secret);
    EXPECT_NEAR(*c.cached_psi, fresh_psi, 1e-12 * std::abs(fresh_psi));
    EXPECT_NEAR(*c.cached_risk, fresh_risk, 1e-12 * std::abs(fresh_risk));
  }
  EXPECT_EQ(problem.trainings(), 30u);
}

}  // namespace
}  // namespace camo
