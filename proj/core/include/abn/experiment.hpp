#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abn/estimators.hpp"
#include "abn/features.hpp"
#include "abn/io.hpp"
#include "abn/svm.hpp"
#include "abn/timeseries.hpp"

namespace abn {

enum class Protocol { within_subject, across_subject };

std::string_view to_string(Protocol protocol);
Protocol parse_protocol(std::string_view text);

/// Everything needed to turn a manifest into networks.
struct PipelineConfig {
  EstimatorConfig estimator;
  std::size_t window = 40;
  std::size_t n_insert = 0;
  SplineBoundary spline = SplineBoundary::natural;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Result of estimating one chunk, or the failure that prevented it.
/// chunk_index is empty when the whole scan failed before chunking.
struct ChunkOutcome {
  ScanId scan;
  std::optional<std::size_t> chunk_index;
  std::optional<FitResult> result;
  std::string stage;
  std::string error;

  bool ok() const { return result.has_value(); }
};

/// Loads, optionally upsamples, chunks and estimates every scan. Output is
/// ordered by (subject, task, session, chunk) whatever the thread count.
/// Failures are returned in-place rather than thrown.
std::vector<ChunkOutcome> estimate_dataset(const DatasetManifest& manifest,
                                           const PipelineConfig& config);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Within-subject: sample-level folds stratified by label (all samples must
/// share a subject). Across-subject: subjects are shuffled by `seed` and
/// dealt into k groups as evenly as possible; a subject's samples never
/// span folds. Index lists are sorted ascending.
std::vector<Fold> kfold_split(std::span<const FeatureVector> samples, std::size_t k,
                              Protocol protocol, std::uint64_t seed);

/// Throws if any subject has samples in both train and test of a fold.
void check_no_subject_leakage(std::span<const FeatureVector> samples, std::span<const Fold> folds);

/// Fraction of test samples predicted correctly after standardizing with
/// train statistics and training an SVM on the train indices.
double evaluate_fold(std::span<const FeatureVector> samples, const Fold& fold,
                     const SvmConfig& svm);

struct SubjectResult {
  std::string subject_id;
  std::vector<double> fold_accuracy;
  double mean = 0.0;
};

/// Accuracy summary of one (estimator, lambda, protocol) configuration.
/// Across-subject: mean/std over folds. Within-subject: mean/std over the
/// per-subject mean accuracies. std is the population standard deviation.
struct CVReport {
  Protocol protocol = Protocol::across_subject;
  EstimatorKind estimator = EstimatorKind::dabn;
  std::optional<double> lambda;  // empty for pearson
  double alpha = 0.0;
  std::size_t epochs = 0;
  std::size_t window = 0;
  std::size_t n_insert = 0;
  std::size_t folds = 0;
  std::size_t n_samples = 0;
  std::vector<double> fold_accuracy;
  std::vector<SubjectResult> subjects;
  double mean = 0.0;
  double std = 0.0;
};

struct ExperimentConfig {
  PipelineConfig pipeline;
  Protocol protocol = Protocol::across_subject;
  std::size_t folds = 3;
  SvmConfig svm;
  std::function<void(const std::string&)> log;
};

/// Cross-validates an SVM on precomputed feature vectors.
CVReport cross_validate(std::span<const FeatureVector> samples, const ExperimentConfig& config);

/// Full pipeline: load -> (upsample) -> chunk -> estimate -> vectorize -> CV.
/// Errors are rethrown with the failing stage and scan named.
CVReport run_experiment(const DatasetManifest& manifest, const ExperimentConfig& config);

/// Population mean and standard deviation.
std::pair<double, double> mean_and_std(std::span<const double> values);

std::string to_json(const CVReport& report);
CVReport cv_report_from_json(const std::string& text);

/// `estimator,lambda,protocol,mean,std`
std::string cv_report_csv_header();
std::string cv_report_csv_row(const CVReport& report);

}  // namespace abn
