#include "abn/features.hpp"

#include <cmath>

#include "abn/error.hpp"

namespace abn {

std::size_t feature_length(std::size_t regions, Directedness directedness) {
  const std::size_t directed = regions * (regions - 1);
  return directedness == Directedness::directed ? directed : directed / 2;
}

std::size_t feature_index(std::size_t i, std::size_t j, std::size_t regions,
                          Directedness directedness) {
  if (i == j || i >= regions || j >= regions) throw InvalidArgument("no feature for this edge");
  if (directedness == Directedness::directed) return i * (regions - 1) + (j < i ? j : j - 1);
  if (i > j) std::swap(i, j);
  // Rows 0..i-1 of the strict upper triangle hold sum_{r<i} (regions-1-r) entries.
  return i * (2 * regions - i - 1) / 2 + (j - i - 1);
}

FeatureVector vectorize(const AdjacencyMatrix& adj) {
  adj.validate();
  const auto m = static_cast<Eigen::Index>(adj.size());
  FeatureVector fv;
  fv.values.resize(static_cast<Eigen::Index>(feature_length(adj.size(), adj.directedness)));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index first = adj.directedness == Directedness::directed ? 0 : i + 1;
    for (Eigen::Index j = first; j < m; ++j) {
      if (j != i) fv.values[k++] = adj.weights(i, j);
    }
  }
  const auto& p = adj.provenance;
  fv.label = p.scan.task_label;
  fv.subject_id = p.scan.subject_id;
  fv.session_id = p.scan.session_id;
  fv.chunk_index = p.chunk_index;
  return fv;
}

Standardizer::Standardizer(const std::vector<const Eigen::VectorXd*>& train) {
  if (train.empty()) throw InvalidArgument("cannot standardize with no training samples");
  const Eigen::Index d = train.front()->size();
  mean_ = Eigen::VectorXd::Zero(d);
  for (const auto* x : train) {
    if (x->size() != d) throw InvalidArgument("feature dimension mismatch");
    mean_ += *x;
  }
  mean_ /= static_cast<double>(train.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto* x : train) var += (*x - mean_).cwiseAbs2();
  var /= static_cast<double>(train.size());
  inv_scale_.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double sd = std::sqrt(var[k]);
    // Constant dimensions carry no information; map them to 0.
    inv_scale_[k] = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  if (x.size() != mean_.size()) throw InvalidArgument("feature dimension mismatch");
  return (x - mean_).cwiseProduct(inv_scale_);
}

}  // namespace abn
