#include "abn/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "abn/error.hpp"

namespace abn {
namespace {

constexpr EstimatorKind kColumnOrder[] = {EstimatorKind::pearson, EstimatorKind::ridge,
                                          EstimatorKind::dabn, EstimatorKind::uabn};

std::string exact(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string lambda_label(const ReportTable& table, std::size_t row) {
  return table.lambdas.empty() ? "-" : exact(table.lambdas[row]);
}

template <typename Format>
std::string render(const ReportTable& table, char sep, bool markdown, Format format) {
  std::ostringstream os;
  const auto line = [&](const std::vector<std::string>& cells) {
    if (markdown) os << "| ";
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) os << (markdown ? " | " : std::string(1, sep));
      os << cells[c];
    }
    if (markdown) os << " |";
    os << '\n';
  };

  std::vector<std::string> header{"lambda"};
  for (auto kind : table.estimators) {
    header.push_back(std::string(to_string(kind)) + "_mean");
    header.push_back(std::string(to_string(kind)) + "_std");
  }
  if (markdown) os << "### " << to_string(table.protocol) << "-subject\n\n";
  line(header);
  if (markdown) line(std::vector<std::string>(header.size(), "---"));

  const std::size_t rows = std::max<std::size_t>(table.lambdas.size(), 1);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> cells{lambda_label(table, r)};
    const double lambda = table.lambdas.empty() ? 0.0 : table.lambdas[r];
    for (auto kind : table.estimators) {
      if (auto cell = table.cell(kind, lambda)) {
        cells.push_back(format(cell->first));
        cells.push_back(format(cell->second));
      } else {
        cells.push_back("-");
        cells.push_back("-");
      }
    }
    line(cells);
  }
  return os.str();
}

}  // namespace

std::optional<std::pair<double, double>> ReportTable::cell(EstimatorKind kind, double lambda) const {
  const std::optional<double> key = kind == EstimatorKind::pearson ? std::nullopt : std::optional(lambda);
  const auto it = cells.find({kind, key});
  if (it == cells.end()) return std::nullopt;
  return it->second;
}

std::vector<ReportTable> build_report_tables(const std::vector<CVReport>& reports) {
  if (reports.empty()) throw InvalidArgument("no CV reports to merge");

  std::vector<ReportTable> tables;
  for (Protocol protocol : {Protocol::within_subject, Protocol::across_subject}) {
    ReportTable table;
    table.protocol = protocol;
    std::set<double> lambdas;
    std::set<EstimatorKind> kinds;
    for (const auto& r : reports) {
      if (r.protocol != protocol) continue;
      const std::optional<double> key =
          r.estimator == EstimatorKind::pearson ? std::nullopt : r.lambda;
      if (r.estimator != EstimatorKind::pearson && !key) {
        throw InvalidArgument(std::string(to_string(r.estimator)) + " report has no lambda");
      }
      const std::pair<double, double> value{r.mean, r.std};
      const auto [it, inserted] = table.cells.emplace(std::pair{r.estimator, key}, value);
      if (!inserted && it->second != value) {
        throw InvalidArgument("conflicting reports for " + std::string(to_string(r.estimator)) +
                              (key ? " lambda=" + exact(*key) : std::string()) + " (" +
                              std::string(to_string(protocol)) + "-subject)");
      }
      if (key) lambdas.insert(*key);
      kinds.insert(r.estimator);
    }
    if (table.cells.empty()) continue;
    table.lambdas.assign(lambdas.begin(), lambdas.end());
    for (auto kind : kColumnOrder) {
      if (kinds.count(kind)) table.estimators.push_back(kind);
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

std::string render_csv(const ReportTable& table) {
  return render(table, ',', false, exact);
}

std::string render_markdown(const ReportTable& table) {
  return render(table, '|', true, fixed4);
}

}  // namespace abn
