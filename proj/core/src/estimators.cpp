#include "abn/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "abn/error.hpp"

namespace abn {
namespace {

std::string describe(const Chunk& chunk) {
  std::ostringstream os;
  os << chunk.id.subject_id << "/" << chunk.id.task_label << "/" << chunk.id.session_id
     << " chunk " << chunk.chunk_index;
  return os.str();
}

void require_masked(const Eigen::VectorXd& w_row, const Chunk& chunk, std::size_t node) {
  if (static_cast<std::size_t>(w_row.size()) != chunk.region_count()) {
    throw InvalidArgument("weight row has " + std::to_string(w_row.size()) + " entries, chunk has " +
                          std::to_string(chunk.region_count()) + " regions");
  }
  if (node >= chunk.region_count()) {
    throw InvalidArgument("node index " + std::to_string(node) + " out of range");
  }
  if (w_row[static_cast<Eigen::Index>(node)] != 0.0) {
    throw InvalidArgument("self-edge weight of node " + std::to_string(node) + " must be zero");
  }
}

void require_fit_input(const Chunk& chunk) {
  if (chunk.region_count() < 2 || chunk.length() < 2) {
    throw InvalidArgument(describe(chunk) + ": chunk must be at least 2 x 2");
  }
  if (!chunk.data.allFinite()) throw InvalidArgument(describe(chunk) + ": non-finite sample");
}

// Residuals E = B - W B and the total loss they imply.
double loss_from_residual(const Eigen::MatrixXd& residual, const Eigen::MatrixXd& weights,
                          double lambda) {
  return residual.squaredNorm() / static_cast<double>(residual.cols()) +
         lambda * weights.squaredNorm();
}

Eigen::MatrixXd gradient_from_residual(const Eigen::MatrixXd& residual, const Eigen::MatrixXd& data,
                                       const Eigen::MatrixXd& weights, double lambda) {
  const double l = static_cast<double>(data.cols());
  Eigen::MatrixXd grad = (-2.0 / l) * (residual * data.transpose()) + (2.0 * lambda) * weights;
  grad.diagonal().setZero();
  return grad;
}

void check_finite_loss(double loss, std::size_t epoch, const Chunk& chunk, double alpha) {
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << describe(chunk) << ": loss became non-finite at epoch " << epoch << " (alpha=" << alpha
       << "); try a smaller learning rate";
    throw NumericError(os.str());
  }
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::dabn: return "dabn";
    case EstimatorKind::uabn: return "uabn";
    case EstimatorKind::ridge: return "ridge";
    case EstimatorKind::pearson: return "pearson";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view text) {
  if (text == "dabn") return EstimatorKind::dabn;
  if (text == "uabn") return EstimatorKind::uabn;
  if (text == "ridge") return EstimatorKind::ridge;
  if (text == "pearson") return EstimatorKind::pearson;
  throw InvalidArgument("unknown estimator '" + std::string(text) +
                        "' (expected dabn, uabn, ridge or pearson)");
}

Directedness directedness_of(EstimatorKind kind) {
  return (kind == EstimatorKind::dabn || kind == EstimatorKind::ridge) ? Directedness::directed
                                                                       : Directedness::undirected;
}

void EstimatorConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("lambda must be a finite value >= 0");
  }
  if (kind == EstimatorKind::ridge && lambda <= 0.0) {
    throw InvalidArgument("ridge regression requires lambda > 0");
  }
  if (kind == EstimatorKind::dabn || kind == EstimatorKind::uabn) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be > 0");
    if (epochs == 0) throw InvalidArgument("epochs must be >= 1");
    if (!(tolerance >= 0.0)) throw InvalidArgument("tolerance must be >= 0");
  }
}

void AdjacencyMatrix::validate() const {
  if (weights.rows() != weights.cols()) throw InvalidArgument("adjacency matrix is not square");
  if (!weights.allFinite()) throw InvalidArgument("adjacency matrix has non-finite entries");
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    if (weights(i, i) != 0.0) throw InvalidArgument("adjacency matrix has a nonzero diagonal");
  }
  if (directedness == Directedness::undirected) {
    for (Eigen::Index i = 0; i < weights.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < weights.cols(); ++j) {
        if (weights(i, j) != weights(j, i)) {
          throw InvalidArgument("undirected adjacency matrix is not symmetric at (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
        }
      }
    }
  }
}

AdjacencyMatrix pearson_network(const Chunk& chunk, std::vector<std::string>* warnings) {
  const Eigen::Index m = chunk.data.rows();
  const double l = static_cast<double>(chunk.data.cols());

  Eigen::MatrixXd centered = chunk.data.colwise() - chunk.data.rowwise().mean();
  Eigen::VectorXd norm(m);
  std::vector<bool> degenerate(static_cast<std::size_t>(m), false);
  for (Eigen::Index i = 0; i < m; ++i) {
    norm[i] = centered.row(i).norm();
    if (!(norm[i] / std::sqrt(l) >= kDegenerateStd)) {
      degenerate[static_cast<std::size_t>(i)] = true;
      if (warnings) {
        warnings->push_back(describe(chunk) + ": region " + std::to_string(i) +
                            " has zero variance; its correlations are set to 0");
      }
    }
  }

  AdjacencyMatrix adj;
  adj.directedness = Directedness::undirected;
  adj.weights = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (degenerate[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (degenerate[static_cast<std::size_t>(j)]) continue;
      const double r = centered.row(i).dot(centered.row(j)) / (norm[i] * norm[j]);
      adj.weights(i, j) = adj.weights(j, i) = std::clamp(r, -1.0, 1.0);
    }
  }
  return adj;
}

AdjacencyMatrix ridge_closed_form(const Chunk& chunk, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("ridge regression requires lambda > 0");
  }
  require_fit_input(chunk);
  const Eigen::Index m = chunk.data.rows();
  const double l = static_cast<double>(chunk.data.cols());
  const Eigen::MatrixXd gram = (chunk.data * chunk.data.transpose()) / l;

  AdjacencyMatrix adj;
  adj.directedness = Directedness::directed;
  adj.weights = Eigen::MatrixXd::Zero(m, m);

  Eigen::MatrixXd system(m - 1, m - 1);
  Eigen::VectorXd rhs(m - 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    // Predictors are every region except i, in index order.
    for (Eigen::Index r = 0, a = 0; a < m; ++a) {
      if (a == i) continue;
      rhs[r] = gram(a, i);
      for (Eigen::Index c = 0, b = 0; b < m; ++b) {
        if (b == i) continue;
        system(r, c) = gram(a, b) + (a == b ? lambda : 0.0);
        ++c;
      }
      ++r;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
      throw NumericError(describe(chunk) + ": ridge system for region " + std::to_string(i) +
                         " is not positive definite (lambda=" + std::to_string(lambda) + ")");
    }
    const Eigen::VectorXd coef = llt.solve(rhs);
    for (Eigen::Index r = 0, a = 0; a < m; ++a) {
      if (a == i) continue;
      adj.weights(i, a) = coef[r++];
    }
  }
  return adj;
}

double node_loss(const Eigen::VectorXd& w_row, const Chunk& chunk, std::size_t node, double lambda) {
  require_masked(w_row, chunk, node);
  const auto i = static_cast<Eigen::Index>(node);
  const Eigen::RowVectorXd residual = chunk.data.row(i) - w_row.transpose() * chunk.data;
  return residual.squaredNorm() / static_cast<double>(chunk.data.cols()) +
         lambda * w_row.squaredNorm();
}

Eigen::VectorXd node_loss_gradient(const Eigen::VectorXd& w_row, const Chunk& chunk,
                                   std::size_t node, double lambda) {
  require_masked(w_row, chunk, node);
  const auto i = static_cast<Eigen::Index>(node);
  const double l = static_cast<double>(chunk.data.cols());
  const Eigen::RowVectorXd residual = chunk.data.row(i) - w_row.transpose() * chunk.data;
  Eigen::VectorXd grad = (-2.0 / l) * (chunk.data * residual.transpose()) + (2.0 * lambda) * w_row;
  grad[i] = 0.0;
  return grad;
}

double total_loss(const Eigen::MatrixXd& weights, const Chunk& chunk, double lambda) {
  const Eigen::MatrixXd residual = chunk.data - weights * chunk.data;
  return loss_from_residual(residual, weights, lambda);
}

Eigen::MatrixXd loss_gradient_matrix(const Eigen::MatrixXd& weights, const Chunk& chunk,
                                     double lambda) {
  const Eigen::MatrixXd residual = chunk.data - weights * chunk.data;
  return gradient_from_residual(residual, chunk.data, weights, lambda);
}

double max_stable_step(const Chunk& chunk, double lambda) {
  const Eigen::MatrixXd gram =
      (chunk.data * chunk.data.transpose()) / static_cast<double>(chunk.data.cols());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return 1.0 / (eig.eigenvalues().maxCoeff() + lambda);
}

FitResult fit_dabn(const Chunk& chunk, const EstimatorConfig& config) {
  if (config.kind != EstimatorKind::dabn) throw InvalidArgument("fit_dabn requires kind=dabn");
  config.validate();
  require_fit_input(chunk);

  const Eigen::Index m = chunk.data.rows();
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd residual = chunk.data;
  FitResult out;
  out.trace.loss.reserve(config.epochs);

  std::size_t epoch = 0;
  for (; epoch < config.epochs; ++epoch) {
    const Eigen::MatrixXd grad = gradient_from_residual(residual, chunk.data, weights, config.lambda);
    if (config.tolerance > 0.0 && grad.lpNorm<Eigen::Infinity>() < config.tolerance) break;
    weights -= config.alpha * grad;
    residual = chunk.data - weights * chunk.data;
    const double loss = loss_from_residual(residual, weights, config.lambda);
    check_finite_loss(loss, epoch + 1, chunk, config.alpha);
    out.trace.loss.push_back(loss);
  }

  out.network.weights = std::move(weights);
  out.network.directedness = Directedness::directed;
  out.network.provenance.epochs_run = epoch;
  return out;
}

FitResult fit_uabn(const Chunk& chunk, const EstimatorConfig& config) {
  if (config.kind != EstimatorKind::uabn) throw InvalidArgument("fit_uabn requires kind=uabn");
  config.validate();
  require_fit_input(chunk);

  const Eigen::Index m = chunk.data.rows();
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd residual = chunk.data;
  FitResult out;
  out.trace.loss.reserve(config.epochs);
  const double half_alpha = 0.5 * config.alpha;

  std::size_t epoch = 0;
  for (; epoch < config.epochs; ++epoch) {
    const Eigen::MatrixXd grad = gradient_from_residual(residual, chunk.data, weights, config.lambda);
    if (config.tolerance > 0.0) {
      double largest = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
          largest = std::max(largest, std::abs(0.5 * (grad(i, j) + grad(j, i))));
        }
      }
      if (largest < config.tolerance) break;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double shared = weights(i, j) - half_alpha * (grad(i, j) + grad(j, i));
        weights(i, j) = shared;
        weights(j, i) = shared;
      }
    }
    residual = chunk.data - weights * chunk.data;
    const double loss = loss_from_residual(residual, weights, config.lambda);
    check_finite_loss(loss, epoch + 1, chunk, config.alpha);
    out.trace.loss.push_back(loss);
  }

  out.network.weights = std::move(weights);
  out.network.directedness = Directedness::undirected;
  out.network.provenance.epochs_run = epoch;
  return out;
}

FitResult estimate_network(const Chunk& chunk, const EstimatorConfig& config) {
  config.validate();
  FitResult out;
  const Chunk* input = &chunk;
  ZScoreResult standardized;
  if (config.zscore) {
    standardized = zscore_chunk(chunk);
    out.warnings = std::move(standardized.warnings);
    input = &standardized.chunk;
  }

  switch (config.kind) {
    case EstimatorKind::dabn: {
      auto fit = fit_dabn(*input, config);
      out.network = std::move(fit.network);
      out.trace = std::move(fit.trace);
      break;
    }
    case EstimatorKind::uabn: {
      auto fit = fit_uabn(*input, config);
      out.network = std::move(fit.network);
      out.trace = std::move(fit.trace);
      break;
    }
    case EstimatorKind::ridge:
      out.network = ridge_closed_form(*input, config.lambda);
      break;
    case EstimatorKind::pearson:
      out.network = pearson_network(*input, config.zscore ? nullptr : &out.warnings);
      break;
  }

  auto& prov = out.network.provenance;
  prov.scan = chunk.id;
  prov.chunk_index = chunk.chunk_index;
  prov.config = config;
  return out;
}

}  // namespace abn
