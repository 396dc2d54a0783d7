#include "abn/timeseries.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "abn/error.hpp"

namespace abn {

Eigen::MatrixXd ScanRecord::matrix() const {
  const auto m = static_cast<Eigen::Index>(region_count());
  const auto n = static_cast<Eigen::Index>(n_samples());
  Eigen::MatrixXd out(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& s = series[static_cast<std::size_t>(i)].samples;
    if (static_cast<Eigen::Index>(s.size()) != n) {
      throw InvalidArgument("scan has ragged region series");
    }
    for (Eigen::Index t = 0; t < n; ++t) out(i, t) = s[static_cast<std::size_t>(t)];
  }
  return out;
}

void ScanRecord::validate() const {
  const auto where = [this] {
    return "scan " + id.subject_id + "/" + id.task_label + "/" + id.session_id + ": ";
  };
  if (series.size() < 2) throw InvalidArgument(where() + "need at least 2 regions");
  const std::size_t n = series.front().samples.size();
  if (n == 0) throw InvalidArgument(where() + "empty region series");
  std::set<std::size_t> seen;
  for (const auto& region : series) {
    if (!seen.insert(region.region_index).second) {
      throw InvalidArgument(where() + "duplicate region index " +
                            std::to_string(region.region_index));
    }
    if (region.samples.size() != n) {
      throw InvalidArgument(where() + "region " + std::to_string(region.region_index) +
                            " has " + std::to_string(region.samples.size()) +
                            " samples, expected " + std::to_string(n));
    }
    for (double v : region.samples) {
      if (!std::isfinite(v)) {
        throw InvalidArgument(where() + "non-finite sample in region " +
                              std::to_string(region.region_index));
      }
    }
  }
}

ScanRecord make_scan(ScanId id, const Eigen::MatrixXd& samples,
                     const std::vector<std::string>& labels) {
  ScanRecord scan;
  scan.id = std::move(id);
  scan.series.resize(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    auto& region = scan.series[static_cast<std::size_t>(i)];
    region.region_index = static_cast<std::size_t>(i);
    if (static_cast<std::size_t>(i) < labels.size()) region.region_label = labels[static_cast<std::size_t>(i)];
    region.samples.assign(samples.row(i).begin(), samples.row(i).end());
  }
  return scan;
}

std::vector<Chunk> partition_into_chunks(const ScanRecord& scan, std::size_t window) {
  if (window < 2) {
    throw InvalidArgument("window length must be >= 2, got " + std::to_string(window));
  }
  const std::size_t n = scan.n_samples();
  const std::size_t count = n / window;
  const auto m = static_cast<Eigen::Index>(scan.region_count());
  const auto l = static_cast<Eigen::Index>(window);

  std::vector<Chunk> chunks;
  chunks.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    Chunk chunk;
    chunk.id = scan.id;
    chunk.chunk_index = c;
    chunk.data.resize(m, l);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& s = scan.series[static_cast<std::size_t>(i)].samples;
      if (s.size() != n) throw InvalidArgument("scan has ragged region series");
      for (Eigen::Index t = 0; t < l; ++t) {
        chunk.data(i, t) = s[c * window + static_cast<std::size_t>(t)];
      }
    }
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

ZScoreResult zscore_chunk(const Chunk& chunk) {
  ZScoreResult out{chunk, {}, {}};
  auto& data = out.chunk.data;
  const double l = static_cast<double>(data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double mean = data.row(i).sum() / l;
    data.row(i).array() -= mean;
    const double sd = std::sqrt(data.row(i).squaredNorm() / l);
    if (sd < kDegenerateStd) {
      data.row(i).setZero();
      out.degenerate_rows.push_back(static_cast<std::size_t>(i));
      std::ostringstream msg;
      msg << "region " << i << " is constant in chunk " << chunk.chunk_index << " of "
          << chunk.id.subject_id << "/" << chunk.id.task_label << "/" << chunk.id.session_id
          << "; zeroed";
      out.warnings.push_back(msg.str());
    } else {
      data.row(i) /= sd;
    }
  }
  return out;
}

}  // namespace abn
