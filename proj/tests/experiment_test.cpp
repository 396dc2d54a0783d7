#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "abn/error.hpp"
#include "abn/experiment.hpp"
#include "abn/synth.hpp"
#include "test_support.hpp"

namespace abn {
namespace {

std::vector<FeatureVector> labelled_samples(std::size_t subjects, std::size_t per_label,
                                            std::vector<std::string> labels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<FeatureVector> out;
  for (std::size_t s = 0; s < subjects; ++s)
    for (const auto& label : labels)
      for (std::size_t c = 0; c < per_label; ++c) {
        FeatureVector fv;
        fv.values = Eigen::VectorXd::Zero(4);
        for (auto& v : fv.values) v = g(rng);
        fv.label = label;
        fv.subject_id = synthetic_subject_id(s);
        fv.chunk_index = c;
        out.push_back(std::move(fv));
      }
  return out;
}

TEST(KFoldTest, AcrossSubjectFoldSizes) {
  const auto samples = labelled_samples(807, 1, {"a"}, 1);
  const auto folds = kfold_split(samples, 3, Protocol::across_subject, 0);
  ASSERT_EQ(folds.size(), 3u);
  for (const auto& f : folds) {
    EXPECT_EQ(f.test.size(), 269u);
    EXPECT_EQ(f.train.size(), 538u);
  }
  EXPECT_NO_THROW(check_no_subject_leakage(samples, folds));

  const auto odd = labelled_samples(808, 1, {"a"}, 1);
  std::vector<std::size_t> sizes;
  for (const auto& f : kfold_split(odd, 3, Protocol::across_subject, 0)) sizes.push_back(f.test.size());
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{269, 269, 270}));
}

TEST(KFoldTest, AcrossSubjectKeepsSubjectsTogether) {
  const auto samples = labelled_samples(10, 3, {"a", "b"}, 2);
  const auto folds = kfold_split(samples, 3, Protocol::across_subject, 5);
  EXPECT_NO_THROW(check_no_subject_leakage(samples, folds));
  std::set<std::size_t> seen;
  for (const auto& f : folds) seen.insert(f.test.begin(), f.test.end());
  EXPECT_EQ(seen.size(), samples.size());
}

TEST(KFoldTest, WithinSubjectIsStratified) {
  const auto samples = labelled_samples(1, 3, {"a", "b", "c"}, 3);
  const auto folds = kfold_split(samples, 3, Protocol::within_subject, 0);
  for (const auto& f : folds) {
    ASSERT_EQ(f.test.size(), 3u);
    std::set<std::string> labels;
    for (std::size_t i : f.test) labels.insert(samples[i].label);
    EXPECT_EQ(labels.size(), 3u);
  }
  const auto many = labelled_samples(2, 3, {"a"}, 3);
  EXPECT_THROW(kfold_split(many, 3, Protocol::within_subject, 0), InvalidArgument);
}

TEST(KFoldTest, SeedDeterminism) {
  const auto samples = labelled_samples(30, 2, {"a", "b"}, 4);
  const auto a = kfold_split(samples, 3, Protocol::across_subject, 9);
  const auto b = kfold_split(samples, 3, Protocol::across_subject, 9);
  const auto c = kfold_split(samples, 3, Protocol::across_subject, 10);
  bool differs = false;
  for (std::size_t f = 0; f < 3; ++f) {
    EXPECT_EQ(a[f].test, b[f].test);
    differs |= a[f].test != c[f].test;
  }
  EXPECT_TRUE(differs);
}

TEST(KFoldTest, LeakageIsDetected) {
  const auto samples = labelled_samples(4, 2, {"a"}, 5);
  Fold bad;
  bad.train = {0, 2, 4, 6};
  bad.test = {1, 3};
  const std::vector<Fold> folds{bad};
  EXPECT_THROW(check_no_subject_leakage(samples, folds), Error);
  EXPECT_THROW(kfold_split(samples, 5, Protocol::across_subject, 0), InvalidArgument);
}

TEST(MeanStdTest, PopulationStd) {
  const std::vector<double> v{0.5, 0.75, 1.0};
  const auto [m, s] = mean_and_std(v);
  EXPECT_NEAR(m, 0.75, 1e-15);
  EXPECT_NEAR(s, std::sqrt(0.125 / 3.0), 1e-15);
}

TEST(CrossValidateTest, ReportedStatisticsMatchPerFoldValues) {
  auto samples = labelled_samples(9, 3, {"a", "b"}, 6);
  for (auto& s : samples) s.values[0] += s.label == "a" ? 1.0 : -1.0;
  for (auto protocol : {Protocol::across_subject, Protocol::within_subject}) {
    ExperimentConfig cfg;
    cfg.protocol = protocol;
    cfg.pipeline.threads = 2;
    const auto report = cross_validate(samples, cfg);
    std::vector<double> recompute;
    if (protocol == Protocol::across_subject) {
      EXPECT_EQ(report.fold_accuracy.size(), 3u);
      recompute = report.fold_accuracy;
    } else {
      EXPECT_EQ(report.subjects.size(), 9u);
      for (const auto& s : report.subjects) {
        EXPECT_EQ(s.fold_accuracy.size(), 3u);
        EXPECT_NEAR(s.mean, mean_and_std(s.fold_accuracy).first, 1e-12);
        recompute.push_back(s.mean);
      }
    }
    double m = 0;
    for (double v : recompute) m += v;
    m /= static_cast<double>(recompute.size());
    double ss = 0;
    for (double v : recompute) ss += (v - m) * (v - m);
    EXPECT_NEAR(report.mean, m, 1e-12);
    EXPECT_NEAR(report.std, std::sqrt(ss / static_cast<double>(recompute.size())), 1e-12);
  }
}

TEST(CrossValidateTest, IndistinguishableTasksScoreChance) {
  // Each feature vector appears once under each label: any classifier gets
  // exactly half of every balanced test fold right.
  auto samples = labelled_samples(12, 2, {"a"}, 7);
  const std::size_t n = samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto copy = samples[i];
    copy.label = "b";
    samples.push_back(copy);
  }
  ExperimentConfig cfg;
  const auto report = cross_validate(samples, cfg);
  for (double acc : report.fold_accuracy) EXPECT_DOUBLE_EQ(acc, 0.5);
  EXPECT_DOUBLE_EQ(report.mean, 0.5);
}

TEST(CrossValidateTest, SingleSubjectWithinGivesThreeFolds) {
  const auto samples = labelled_samples(1, 3, {"a", "b", "c"}, 8);
  ExperimentConfig cfg;
  cfg.protocol = Protocol::within_subject;
  const auto report = cross_validate(samples, cfg);
  ASSERT_EQ(report.subjects.size(), 1u);
  EXPECT_EQ(report.subjects.front().fold_accuracy.size(), 3u);
}

class SyntheticPipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new std::filesystem::path(abn::testing::scratch_dir("pipeline"));
    SynthConfig cfg;
    cfg.regions = 8;
    cfg.subjects = 9;
    cfg.n_per_scan = 120;
    cfg.seed = 3;
    manifest_ = new DatasetManifest(build_synthetic_dataset(cfg, *dir_));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static inline std::filesystem::path* dir_ = nullptr;
  static inline DatasetManifest* manifest_ = nullptr;
};

TEST_F(SyntheticPipelineTest, EstimateDatasetIsThreadCountInvariant) {
  PipelineConfig cfg;
  cfg.estimator.kind = EstimatorKind::uabn;
  cfg.estimator.lambda = 32;
  cfg.estimator.alpha = 1e-3;
  cfg.window = 40;
  cfg.threads = 1;
  const auto serial = estimate_dataset(*manifest_, cfg);
  cfg.threads = 4;
  const auto parallel = estimate_dataset(*manifest_, cfg);
  ASSERT_EQ(serial.size(), 18u * 3u);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t k = 0; k < serial.size(); ++k) {
    ASSERT_TRUE(serial[k].ok()) << serial[k].error;
    EXPECT_EQ(serial[k].scan, parallel[k].scan);
    EXPECT_EQ(serial[k].chunk_index, parallel[k].chunk_index);
    EXPECT_TRUE((serial[k].result->network.weights.array() == parallel[k].result->network.weights.array()).all());
  }
  EXPECT_TRUE(std::is_sorted(serial.begin(), serial.end(),
                             [](const ChunkOutcome& a, const ChunkOutcome& b) { return a.scan < b.scan; }));
}

TEST_F(SyntheticPipelineTest, DistinctNetworksAreSeparable) {
  ExperimentConfig cfg;
  cfg.pipeline.estimator.kind = EstimatorKind::ridge;
  cfg.pipeline.estimator.lambda = 0.1;
  const auto report = run_experiment(*manifest_, cfg);
  EXPECT_GE(report.mean, 0.9);
  EXPECT_EQ(report.n_samples, 54u);
  EXPECT_EQ(report.lambda, 0.1);
}

TEST_F(SyntheticPipelineTest, FailuresNameStageAndScan) {
  auto broken = *manifest_;
  broken.entries[1].path = *dir_ / "missing.csv";
  ExperimentConfig cfg;
  cfg.pipeline.estimator.kind = EstimatorKind::pearson;
  try {
    run_experiment(broken, cfg);
    FAIL();
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("load"), std::string::npos) << what;
    EXPECT_NE(what.find(broken.entries[1].id.subject_id), std::string::npos) << what;
  }
}

TEST(CVReportTest, JsonRoundTripAndCsvRow) {
  CVReport r;
  r.protocol = Protocol::within_subject;
  r.estimator = EstimatorKind::dabn;
  r.lambda = 64;
  r.fold_accuracy = {0.5, 1.0};
  r.subjects = {{"sub001", {0.5, 1.0}, 0.75}};
  r.mean = 0.75;
  r.std = 0.1;
  const auto back = cv_report_from_json(to_json(r));
  EXPECT_EQ(back.protocol, r.protocol);
  EXPECT_EQ(back.lambda, r.lambda);
  EXPECT_EQ(back.subjects.front().fold_accuracy, r.subjects.front().fold_accuracy);
  EXPECT_EQ(cv_report_csv_row(back), "dabn,64,within,0.75,0.1");
  r.estimator = EstimatorKind::pearson;
  r.lambda.reset();
  EXPECT_EQ(cv_report_csv_row(r), "pearson,NA,within,0.75,0.1");
  EXPECT_THROW(cv_report_from_json("{"), ParseError);
}

}  // namespace
}  // namespace abn
