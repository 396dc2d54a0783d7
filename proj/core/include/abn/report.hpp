#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "abn/experiment.hpp"

namespace abn {

/// Accuracy table laid out with one row per lambda and a (mean, std) column
/// pair per estimator, for one protocol. Pearson has no lambda and is
/// repeated on every row; missing cells print as "-".
struct ReportTable {
  Protocol protocol = Protocol::across_subject;
  std::vector<double> lambdas;
  std::vector<EstimatorKind> estimators;
  /// (estimator, lambda) -> (mean, std); pearson is keyed with no lambda.
  std::map<std::pair<EstimatorKind, std::optional<double>>, std::pair<double, double>> cells;

  std::optional<std::pair<double, double>> cell(EstimatorKind kind, double lambda) const;
};

/// Groups reports by protocol. Throws on an empty input or on duplicate
/// (protocol, estimator, lambda) entries whose mean or std differ.
std::vector<ReportTable> build_report_tables(const std::vector<CVReport>& reports);

std::string render_csv(const ReportTable& table);
std::string render_markdown(const ReportTable& table);

}  // namespace abn
