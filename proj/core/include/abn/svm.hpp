#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "abn/features.hpp"

namespace abn {

struct SvmConfig {
  double c = 1.0;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM. Class k scores x as weights.row(k) . x + bias[k].
struct LinearSVMModel {
  std::vector<std::string> classes;
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  SvmConfig config;

  std::size_t dimension() const { return static_cast<std::size_t>(weights.cols()); }
  Eigen::VectorXd decision_values(const Eigen::VectorXd& x) const;
};

/// A sample as seen by the classifier: feature values plus label.
struct LabeledSample {
  const Eigen::VectorXd* x = nullptr;
  std::string_view label;
};

/// Trains one binary soft-margin SVM per class (sorted label order) with
/// Pegasos-style stochastic subgradient descent on
///     (lambda/2) ||w||^2 + mean_i hinge(y_i (w . x_i + b)),   lambda = 1/(C n)
/// which is the usual 1/2 ||w||^2 + C sum hinge objective rescaled. The bias
/// is an extra regularized weight on a constant feature. Sample order in each
/// epoch is a permutation drawn from `seed`, so training is reproducible.
LinearSVMModel train_linear_svm(std::span<const LabeledSample> samples, const SvmConfig& config);
LinearSVMModel train_linear_svm(std::span<const FeatureVector> samples, const SvmConfig& config);

/// Argmax of decision values; ties go to the earliest class.
const std::string& predict(const LinearSVMModel& model, const Eigen::VectorXd& x);
const std::string& predict(const LinearSVMModel& model, const FeatureVector& sample);

}  // namespace abn
