#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "abn/error.hpp"
#include "abn/estimators.hpp"
#include "test_support.hpp"

namespace abn {
namespace {

using testing::random_chunk;

EstimatorConfig gd_config(EstimatorKind kind, double lambda, double alpha, std::size_t epochs) {
  EstimatorConfig cfg;
  cfg.kind = kind;
  cfg.lambda = lambda;
  cfg.alpha = alpha;
  cfg.epochs = epochs;
  cfg.zscore = false;
  return cfg;
}

Chunk chunk_from(std::initializer_list<std::initializer_list<double>> rows) {
  Chunk c;
  c.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index t = 0;
    for (double v : r) c.data(i, t++) = v;
    ++i;
  }
  return c;
}

// ---- Pearson ---------------------------------------------------------------

TEST(PearsonTest, IdenticalAndNegatedRows) {
  Chunk c = random_chunk(3, 25, 1, false);
  c.data.row(1) = c.data.row(0);
  c.data.row(2) = -c.data.row(0);
  const auto adj = pearson_network(c);
  EXPECT_NEAR(adj.weights(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(adj.weights(0, 2), -1.0, 1e-15);
  EXPECT_EQ(adj.directedness, Directedness::undirected);
}

TEST(PearsonTest, SmallExampleMatchesTextbookFormula) {
  const Chunk c = chunk_from({{1, 2, 3, 4}, {1, 2, 3, 5}});
  const auto adj = pearson_network(c);
  EXPECT_NEAR(adj.weights(0, 1), testing::textbook_pearson({1, 2, 3, 4}, {1, 2, 3, 5}), 1e-15);
  EXPECT_NEAR(adj.weights(0, 1), 0.9827076298239908, 1e-15);
}

TEST(PearsonTest, MatchesTextbookOnRandomChunks) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Chunk c = random_chunk(7, 40, seed, false);
    const auto adj = pearson_network(c);
    for (Eigen::Index i = 0; i < 7; ++i)
      for (Eigen::Index j = 0; j < 7; ++j)
        if (i != j) {
          EXPECT_NEAR(adj.weights(i, j), testing::textbook_pearson(testing::row_of(c, i), testing::row_of(c, j)), 1e-12);
        }
  }
}

TEST(PearsonTest, NegatingOneRegionFlipsOnlyItsEdges) {
  Chunk c = random_chunk(6, 40, 4, false);
  const auto before = pearson_network(c);
  c.data.row(2) *= -1.0;
  const auto after = pearson_network(c);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double expected = (i == 2) != (j == 2) ? -before.weights(i, j) : before.weights(i, j);
      EXPECT_NEAR(after.weights(i, j), expected, 1e-14);
    }
}

TEST(PearsonTest, ZeroVarianceRowGivesZeroEdgesAndWarning) {
  Chunk c = random_chunk(4, 20, 8, false);
  c.data.row(3).setConstant(2.5);
  std::vector<std::string> warnings;
  const auto adj = pearson_network(c, &warnings);
  EXPECT_TRUE(adj.weights.row(3).isZero(0.0));
  EXPECT_TRUE(adj.weights.col(3).isZero(0.0));
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_NO_THROW(adj.validate());
}

// ---- Ridge -----------------------------------------------------------------

TEST(RidgeTest, LargeLambdaShrinksToZero) {
  const auto adj = ridge_closed_form(random_chunk(10, 40, 2), 1e9);
  EXPECT_LT(adj.weights.lpNorm<Eigen::Infinity>(), 1e-6);
}

// Frozen from the scalar closed form (b1.b0/L) / (b1.b1/L + lambda).
TEST(RidgeTest, TwoRegionScalarClosedForm) {
  const Chunk c = chunk_from({{1.0, -2.0, 0.5, 3.0, -1.0}, {0.5, -1.0, 1.5, 2.0, -0.5}});
  const auto adj = ridge_closed_form(c, 0.7);
  EXPECT_NEAR(adj.weights(0, 1), 0.8666666666666667, 1e-14);
  EXPECT_NEAR(adj.weights(1, 0), 0.52, 1e-14);
  EXPECT_EQ(adj.weights(0, 0), 0.0);
  EXPECT_EQ(adj.weights(1, 1), 0.0);
}

TEST(RidgeTest, NormalEquationResidualAndDesignMatrixOracle) {
  const Chunk c = random_chunk(10, 40, 3);
  const double lambda = 32.0;
  const auto adj = ridge_closed_form(c, lambda);
  const double l = 40.0;
  for (Eigen::Index i = 0; i < 10; ++i) {
    Eigen::MatrixXd b(40, 9);
    for (Eigen::Index j = 0, col = 0; j < 10; ++j)
      if (j != i) b.col(col++) = c.data.row(j).transpose();
    Eigen::VectorXd a(9);
    for (Eigen::Index j = 0, col = 0; j < 10; ++j)
      if (j != i) a[col++] = adj.weights(i, j);
    const Eigen::VectorXd residual =
        (b.transpose() * b / l + lambda * Eigen::MatrixXd::Identity(9, 9)) * a - b.transpose() * c.data.row(i).transpose() / l;
    EXPECT_LT(residual.lpNorm<Eigen::Infinity>(), 1e-8);
    const Eigen::VectorXd oracle = testing::design_matrix_ridge(c, static_cast<std::size_t>(i), lambda);
    EXPECT_LT((adj.weights.row(i).transpose() - oracle).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(RidgeTest, RejectsNonPositiveLambda) {
  const Chunk c = random_chunk(4, 10, 1);
  EXPECT_THROW(ridge_closed_form(c, 0.0), InvalidArgument);
  EXPECT_THROW(ridge_closed_form(c, -1.0), InvalidArgument);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::ridge;
  cfg.lambda = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

// ---- Loss and gradient -----------------------------------------------------

TEST(NodeLossTest, ZeroWeightsGiveMeanSquare) {
  const Chunk c = random_chunk(5, 30, 4, false);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(5);
  EXPECT_NEAR(node_loss(w, c, 2, 123.0), c.data.row(2).squaredNorm() / 30.0, 1e-13);
}

TEST(NodeLossTest, ExactLinearCombinationHasZeroLoss) {
  Chunk c = random_chunk(4, 30, 5, false);
  c.data.row(0) = 0.5 * c.data.row(1) - 2.0 * c.data.row(2) + 0.25 * c.data.row(3);
  Eigen::VectorXd w(4);
  w << 0.0, 0.5, -2.0, 0.25;
  const double scale = c.data.row(0).squaredNorm() / 30.0;
  EXPECT_LE(node_loss(w, c, 0, 0.0), 1e-20 * scale + 1e-28);
}

TEST(NodeLossTest, MatchesLoopEvaluation) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Chunk c = random_chunk(8, 40, seed);
    const std::size_t node = seed % 8;
    Eigen::VectorXd w(8);
    for (auto& v : w) v = g(rng);
    w[static_cast<Eigen::Index>(node)] = 0.0;
    const std::vector<double> wv(w.begin(), w.end());
    EXPECT_NEAR(node_loss(w, c, node, 32.0), testing::loop_node_loss(wv, c, node, 32.0), 1e-11);
  }
}

TEST(NodeLossTest, SelfWeightMustBeZero) {
  const Chunk c = random_chunk(3, 10, 1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(3);
  w[1] = 0.1;
  EXPECT_THROW(node_loss(w, c, 1, 0.0), InvalidArgument);
  EXPECT_THROW(node_loss_gradient(w, c, 1, 0.0), InvalidArgument);
}

TEST(GradientTest, VanishesAtRidgeSolution) {
  const Chunk c = random_chunk(10, 40, 7);
  for (double lambda : {1.0, 32.0, 512.0}) {
    const auto adj = ridge_closed_form(c, lambda);
    for (std::size_t i = 0; i < 10; ++i) {
      const Eigen::VectorXd w = adj.weights.row(static_cast<Eigen::Index>(i)).transpose();
      EXPECT_LT(node_loss_gradient(w, c, i, lambda).lpNorm<Eigen::Infinity>(), 1e-8);
    }
  }
}

TEST(GradientTest, AtOriginMatchesDirectFormula) {
  const Chunk c = random_chunk(5, 30, 8);
  const Eigen::VectorXd g = node_loss_gradient(Eigen::VectorXd::Zero(5), c, 1, 0.0);
  for (Eigen::Index j = 0; j < 5; ++j) {
    const double expected = j == 1 ? 0.0 : -2.0 * c.data.row(1).dot(c.data.row(j)) / 30.0;
    EXPECT_NEAR(g[j], expected, 1e-14);
  }
}

TEST(GradientTest, MatchesCentralFiniteDifferences) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 0.2);
  const double h = 1e-6;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Chunk c = random_chunk(6, 40, seed + 100);
    const std::size_t node = seed % 6;
    Eigen::VectorXd w(6);
    for (auto& v : w) v = g(rng);
    w[static_cast<Eigen::Index>(node)] = 0.0;
    const Eigen::VectorXd grad = node_loss_gradient(w, c, node, 32.0);
    for (Eigen::Index j = 0; j < 6; ++j) {
      if (j == static_cast<Eigen::Index>(node)) continue;
      Eigen::VectorXd up = w, down = w;
      up[j] += h;
      down[j] -= h;
      const double fd = (node_loss(up, c, node, 32.0) - node_loss(down, c, node, 32.0)) / (2 * h);
      EXPECT_LT(std::abs(fd - grad[j]) / std::max(1.0, std::abs(grad[j])), 1e-5);
    }
  }
}

TEST(GradientTest, MatrixRowsEqualPerNodeGradients) {
  const Chunk c = random_chunk(6, 30, 10);
  Eigen::MatrixXd w = Eigen::MatrixXd::Random(6, 6) * 0.1;
  w.diagonal().setZero();
  const Eigen::MatrixXd g = loss_gradient_matrix(w, c, 3.0);
  for (std::size_t i = 0; i < 6; ++i) {
    const Eigen::VectorXd row = w.row(static_cast<Eigen::Index>(i)).transpose();
    EXPECT_LT((g.row(static_cast<Eigen::Index>(i)).transpose() - node_loss_gradient(row, c, i, 3.0)).lpNorm<Eigen::Infinity>(), 1e-13);
  }
}

// ---- dABN ------------------------------------------------------------------

TEST(DabnTest, OneStepFromOrigin) {
  const Chunk c = random_chunk(6, 40, 11);
  const double alpha = 1e-3;
  const auto fit = fit_dabn(c, gd_config(EstimatorKind::dabn, 0.0, alpha, 1));
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double expected = i == j ? 0.0 : 2.0 * alpha * c.data.row(i).dot(c.data.row(j)) / 40.0;
      EXPECT_NEAR(fit.network.weights(i, j), expected, 1e-16);
    }
  EXPECT_EQ(fit.trace.loss.size(), 1u);
}

TEST(DabnTest, ConvergesToRidgeSolution) {
  const Chunk c = random_chunk(10, 40, 12);
  const double lambda = 32.0;
  auto cfg = gd_config(EstimatorKind::dabn, lambda, 0.9 * max_stable_step(c, lambda), 100000);
  cfg.tolerance = 1e-8;
  const auto fit = fit_dabn(c, cfg);
  EXPECT_LT(fit.network.provenance.epochs_run, cfg.epochs);
  const auto ridge = ridge_closed_form(c, lambda);
  EXPECT_LT((fit.network.weights - ridge.weights).lpNorm<Eigen::Infinity>(), 1e-4);
}

TEST(DabnTest, ZeroChunkStaysZero) {
  Chunk c;
  c.data = Eigen::MatrixXd::Zero(4, 10);
  const auto fit = fit_dabn(c, gd_config(EstimatorKind::dabn, 5.0, 0.01, 20));
  EXPECT_TRUE(fit.network.weights.isZero(0.0));
  ASSERT_EQ(fit.trace.loss.size(), 20u);
  for (double v : fit.trace.loss) EXPECT_EQ(v, 0.0);
}

TEST(DabnTest, GenericallyAsymmetricWithZeroDiagonal) {
  const Chunk c = random_chunk(8, 40, 13);
  const auto fit = fit_dabn(c, gd_config(EstimatorKind::dabn, 1.0, 0.05, 50));
  EXPECT_GT((fit.network.weights - fit.network.weights.transpose()).lpNorm<Eigen::Infinity>(), 0.0);
  for (Eigen::Index i = 0; i < 8; ++i) EXPECT_EQ(fit.network.weights(i, i), 0.0);
}

TEST(DabnTest, DivergenceIsReported) {
  const Chunk c = random_chunk(6, 20, 14);
  try {
    fit_dabn(c, gd_config(EstimatorKind::dabn, 0.0, 50.0, 2000));
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("smaller"), std::string::npos);
  }
}

TEST(DabnTest, TraceNonIncreasingAtSafeStep) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Chunk c = random_chunk(10, 40, 200 + seed);
    for (double lambda : {0.0, 32.0}) {
      const double alpha = 0.99 * max_stable_step(c, lambda);
      for (auto kind : {EstimatorKind::dabn, EstimatorKind::uabn}) {
        const auto cfg = gd_config(kind, lambda, alpha, 100);
        const auto fit = kind == EstimatorKind::dabn ? fit_dabn(c, cfg) : fit_uabn(c, cfg);
        double previous = total_loss(Eigen::MatrixXd::Zero(10, 10), c, lambda);
        for (double v : fit.trace.loss) {
          EXPECT_LE(v, previous * (1 + 1e-14));
          previous = v;
        }
      }
    }
  }
}

// ---- uABN ------------------------------------------------------------------

TEST(UabnTest, SymmetricAfterEveryEpoch) {
  const Chunk c = random_chunk(7, 40, 15);
  for (std::size_t epochs = 1; epochs <= 15; ++epochs) {
    const auto fit = fit_uabn(c, gd_config(EstimatorKind::uabn, 4.0, 0.05, epochs));
    EXPECT_TRUE((fit.network.weights.array() == fit.network.weights.transpose().array()).all());
    EXPECT_NO_THROW(fit.network.validate());
  }
}

TEST(UabnTest, OneStepFromOriginMatchesDabn) {
  const Chunk c = random_chunk(6, 40, 16);
  const auto u = fit_uabn(c, gd_config(EstimatorKind::uabn, 0.0, 1e-3, 1));
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double expected = i == j ? 0.0 : 2.0 * 1e-3 * c.data.row(i).dot(c.data.row(j)) / 40.0;
      EXPECT_NEAR(u.network.weights(i, j), expected, 1e-16);
    }
}

TEST(UabnTest, EpochEqualsSymmetricProjectionOfGradientStep) {
  const Chunk c = random_chunk(6, 40, 17);
  const double alpha = 0.02, lambda = 2.0;
  const auto w1 = fit_uabn(c, gd_config(EstimatorKind::uabn, lambda, alpha, 3)).network.weights;
  const auto w2 = fit_uabn(c, gd_config(EstimatorKind::uabn, lambda, alpha, 4)).network.weights;
  const Eigen::MatrixXd g = loss_gradient_matrix(w1, c, lambda);
  const Eigen::MatrixXd projected = w1 - alpha * 0.5 * (g + g.transpose());
  EXPECT_LT((w2 - projected).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(UabnTest, PairUpdateMatchesSharedParameterFiniteDifference) {
  const Chunk c = random_chunk(5, 40, 18);
  const double alpha = 0.03, lambda = 8.0, h = 1e-6;
  const Eigen::MatrixXd w0 = fit_uabn(c, gd_config(EstimatorKind::uabn, lambda, alpha, 2)).network.weights;
  const Eigen::MatrixXd w1 = fit_uabn(c, gd_config(EstimatorKind::uabn, lambda, alpha, 3)).network.weights;
  const auto pair_loss = [&](const Eigen::MatrixXd& w, Eigen::Index i, Eigen::Index j) {
    return node_loss(w.row(i).transpose(), c, static_cast<std::size_t>(i), lambda) +
           node_loss(w.row(j).transpose(), c, static_cast<std::size_t>(j), lambda);
  };
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = i + 1; j < 5; ++j) {
      Eigen::MatrixXd up = w0, down = w0;
      up(i, j) += h, up(j, i) += h;
      down(i, j) -= h, down(j, i) -= h;
      const double fd = (pair_loss(up, i, j) - pair_loss(down, i, j)) / (2 * h);
      const double expected = -(alpha / 2) * fd;
      const double update = w1(i, j) - w0(i, j);
      EXPECT_LT(std::abs(update - expected) / std::max(1e-3, std::abs(expected)), 1e-5);
    }
}

// ---- Dispatch --------------------------------------------------------------

TEST(EstimateNetworkTest, StampsProvenanceAndIsDeterministic) {
  Chunk c = random_chunk(5, 40, 19, false);
  c.chunk_index = 3;
  for (auto kind : {EstimatorKind::dabn, EstimatorKind::uabn, EstimatorKind::ridge, EstimatorKind::pearson}) {
    EstimatorConfig cfg;
    cfg.kind = kind;
    cfg.lambda = 32;
    cfg.alpha = 1e-3;
    cfg.epochs = 10;
    const auto a = estimate_network(c, cfg);
    const auto b = estimate_network(c, cfg);
    EXPECT_TRUE((a.network.weights.array() == b.network.weights.array()).all());
    EXPECT_EQ(a.network.provenance.chunk_index, 3u);
    EXPECT_EQ(a.network.provenance.config.kind, kind);
    EXPECT_EQ(a.network.directedness, directedness_of(kind));
    EXPECT_NO_THROW(a.network.validate());
  }
}

TEST(EstimateNetworkTest, ZScoreMakesGradientEstimatorsScaleFree) {
  Chunk c = random_chunk(5, 40, 20, false);
  Chunk scaled = c;
  scaled.data.row(1) = scaled.data.row(1) * 1000.0 + Eigen::RowVectorXd::Constant(40, 7.0);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::dabn;
  cfg.lambda = 32;
  cfg.alpha = 1e-3;
  cfg.epochs = 10;
  const auto a = estimate_network(c, cfg);
  const auto b = estimate_network(scaled, cfg);
  EXPECT_LT((a.network.weights - b.network.weights).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(EstimatorConfigTest, Validation) {
  EstimatorConfig cfg;
  cfg.alpha = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.alpha = 1e-3;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.epochs = 1;
  cfg.lambda = -1;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg.lambda = 0;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(parse_estimator_kind("uabn"), EstimatorKind::uabn);
  EXPECT_THROW(parse_estimator_kind("svm"), InvalidArgument);
}

}  // namespace
}  // namespace abn
