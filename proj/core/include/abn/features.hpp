#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "abn/estimators.hpp"

namespace abn {

/// Flattened edge weights of one network, labelled with its task.
struct FeatureVector {
  Eigen::VectorXd values;
  std::string label;
  std::string subject_id;
  std::string session_id;
  std::size_t chunk_index = 0;
};

/// Directed: off-diagonal entries in row-major order, length M(M-1).
/// Undirected: strict upper triangle in row-major order, length M(M-1)/2.
FeatureVector vectorize(const AdjacencyMatrix& adj);

std::size_t feature_length(std::size_t regions, Directedness directedness);

/// Position of edge (i, j) in the vectorized layout.
std::size_t feature_index(std::size_t i, std::size_t j, std::size_t regions,
                          Directedness directedness);

/// Per-dimension standardization fitted on training samples only.
class Standardizer {
 public:
  Standardizer() = default;
  explicit Standardizer(const std::vector<const Eigen::VectorXd*>& train);

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd inv_scale_;
};

}  // namespace abn
