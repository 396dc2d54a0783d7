#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "abn/timeseries.hpp"

namespace abn {

enum class EstimatorKind { dabn, uabn, ridge, pearson };
enum class Directedness { directed, undirected };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view text);

/// Directed for dabn and ridge, undirected for uabn and pearson.
Directedness directedness_of(EstimatorKind kind);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::dabn;
  double lambda = 0.0;
  double alpha = 1e-5;
  std::size_t epochs = 100;
  bool zscore = true;
  /// When > 0, gradient descent stops once the masked gradient infinity-norm
  /// drops below this value; `epochs` is then the cap.
  double tolerance = 0.0;

  /// Throws InvalidArgument on lambda < 0, alpha <= 0, epochs == 0, or
  /// ridge with lambda <= 0.
  void validate() const;
};

struct EstimateProvenance {
  ScanId scan;
  std::size_t chunk_index = 0;
  EstimatorConfig config;
  std::size_t epochs_run = 0;
};

/// M x M edge weights. Row i holds the coefficients predicting region i from
/// the other regions, so (i, j) is the edge into i from j. The diagonal is
/// exactly zero and undirected matrices are bitwise symmetric.
struct AdjacencyMatrix {
  Eigen::MatrixXd weights;
  Directedness directedness = Directedness::directed;
  EstimateProvenance provenance;

  std::size_t size() const { return static_cast<std::size_t>(weights.rows()); }

  /// Throws if the diagonal is nonzero, an entry is non-finite, or an
  /// undirected matrix is not exactly symmetric.
  void validate() const;
};

/// Total loss (sum over output nodes) after each epoch.
struct TrainingTrace {
  std::vector<double> loss;
};

struct FitResult {
  AdjacencyMatrix network;
  TrainingTrace trace;
  std::vector<std::string> warnings;
};

/// Pairwise Pearson correlation of the chunk rows. Rows with zero variance
/// get zero edges and a warning.
AdjacencyMatrix pearson_network(const Chunk& chunk, std::vector<std::string>* warnings = nullptr);

/// Exact minimizer of node_loss for every node: each row solves
/// (B'B/L + lambda I) a = B'b_i / L by LDL^T, with B the other regions.
AdjacencyMatrix ridge_closed_form(const Chunk& chunk, double lambda);

/// Mean squared prediction error of region `node` over the window plus
/// lambda * ||w_row||^2. Requires w_row[node] == 0.
double node_loss(const Eigen::VectorXd& w_row, const Chunk& chunk, std::size_t node,
                 double lambda);

/// Analytic gradient of node_loss with the self-edge component masked to 0.
Eigen::VectorXd node_loss_gradient(const Eigen::VectorXd& w_row, const Chunk& chunk,
                                   std::size_t node, double lambda);

/// Sum of node_loss over all rows of `weights`.
double total_loss(const Eigen::MatrixXd& weights, const Chunk& chunk, double lambda);

/// Full gradient matrix: row i is node_loss_gradient for node i.
Eigen::MatrixXd loss_gradient_matrix(const Eigen::MatrixXd& weights, const Chunk& chunk,
                                     double lambda);

/// Largest step for which full-batch descent on node_loss is monotone:
/// 1 / (lambda_max(B B'/L) + lambda), B the full M x L chunk.
double max_stable_step(const Chunk& chunk, double lambda);

/// Directed network by full-batch gradient descent from zero weights.
FitResult fit_dabn(const Chunk& chunk, const EstimatorConfig& config);

/// Undirected network by gradient descent with shared twin weights.
/// Each epoch applies w_ij = w_ji <- w_ij - alpha/2 (dL_i/dw_ij + dL_j/dw_ji)
/// with both partials taken at the epoch-start weights.
FitResult fit_uabn(const Chunk& chunk, const EstimatorConfig& config);

/// Dispatches on config.kind, applying z-scoring first when config.zscore is
/// set, and stamps provenance on the result.
FitResult estimate_network(const Chunk& chunk, const EstimatorConfig& config);

}  // namespace abn
