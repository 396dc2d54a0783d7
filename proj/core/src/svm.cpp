#include "abn/svm.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "abn/error.hpp"

namespace abn {

Eigen::VectorXd LinearSVMModel::decision_values(const Eigen::VectorXd& x) const {
  if (x.size() != weights.cols()) {
    throw InvalidArgument("feature dimension " + std::to_string(x.size()) + " does not match model (" +
                          std::to_string(weights.cols()) + ")");
  }
  return weights * x + bias;
}

LinearSVMModel train_linear_svm(std::span<const LabeledSample> samples, const SvmConfig& config) {
  if (!(config.c > 0.0)) throw InvalidArgument("SVM C must be > 0");
  if (config.epochs == 0) throw InvalidArgument("SVM epochs must be >= 1");
  if (samples.empty()) throw InvalidArgument("no training samples");

  const Eigen::Index d = samples.front().x->size();
  std::set<std::string> labels;
  for (const auto& s : samples) {
    if (s.x->size() != d) throw InvalidArgument("training samples have differing feature lengths");
    labels.emplace(s.label);
  }
  if (labels.size() < 2) throw InvalidArgument("SVM training needs at least 2 classes");

  const std::size_t n = samples.size();
  const double lambda = 1.0 / (config.c * static_cast<double>(n));

  // One permutation per epoch, shared by all binary problems.
  std::mt19937_64 rng(config.seed);
  std::vector<std::vector<std::size_t>> order(config.epochs);
  for (auto& perm : order) {
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
  }

  LinearSVMModel model;
  model.classes.assign(labels.begin(), labels.end());
  model.config = config;
  const auto k = static_cast<Eigen::Index>(model.classes.size());
  model.weights = Eigen::MatrixXd::Zero(k, d);
  model.bias = Eigen::VectorXd::Zero(k);

  for (Eigen::Index c = 0; c < k; ++c) {
    const std::string& positive = model.classes[static_cast<std::size_t>(c)];
    // w = scale * v keeps the (1 - 1/t) shrink O(1).
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    double v_bias = 0.0;
    double scale = 1.0;
    std::size_t t = 0;
    for (const auto& perm : order) {
      for (std::size_t idx : perm) {
        ++t;
        const auto& s = samples[idx];
        const double y = s.label == positive ? 1.0 : -1.0;
        const double margin = y * scale * (v.dot(*s.x) + v_bias);
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        if (t == 1) {
          v.setZero();
          v_bias = 0.0;
          scale = 1.0;
        } else {
          scale *= 1.0 - 1.0 / static_cast<double>(t);
        }
        if (margin < 1.0) {
          const double step = eta * y / scale;
          v += step * *s.x;
          v_bias += step;
        }
        if (scale < 1e-100) {
          v *= scale;
          v_bias *= scale;
          scale = 1.0;
        }
      }
    }
    model.weights.row(c) = scale * v.transpose();
    model.bias[c] = scale * v_bias;
  }
  return model;
}

LinearSVMModel train_linear_svm(std::span<const FeatureVector> samples, const SvmConfig& config) {
  std::vector<LabeledSample> view;
  view.reserve(samples.size());
  for (const auto& s : samples) view.push_back({&s.values, s.label});
  return train_linear_svm(std::span<const LabeledSample>(view), config);
}

const std::string& predict(const LinearSVMModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd scores = model.decision_values(x);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return model.classes[static_cast<std::size_t>(best)];
}

const std::string& predict(const LinearSVMModel& model, const FeatureVector& sample) {
  return predict(model, sample.values);
}

}  // namespace abn
