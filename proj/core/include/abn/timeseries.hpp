#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace abn {

/// Region-averaged BOLD signal of one anatomical region.
struct RegionSeries {
  std::size_t region_index = 0;
  std::string region_label;
  std::vector<double> samples;
};

/// Identifies where a scan (and everything derived from it) came from.
struct ScanId {
  std::string subject_id;
  std::string task_label;
  std::string session_id;

  friend auto operator<=>(const ScanId&, const ScanId&) = default;
};

/// One subject/session/task recording: M regions sharing n_samples time points.
struct ScanRecord {
  ScanId id;
  std::vector<RegionSeries> series;

  std::size_t region_count() const { return series.size(); }
  std::size_t n_samples() const { return series.empty() ? 0 : series.front().samples.size(); }

  /// Region-major M x N matrix view of the samples (copy).
  Eigen::MatrixXd matrix() const;

  /// Checks M >= 2, equal lengths, unique region indices and finite samples.
  void validate() const;
};

/// An M x L window of a scan; row i is region i over [c*L, (c+1)*L).
struct Chunk {
  ScanId id;
  std::size_t chunk_index = 0;
  Eigen::MatrixXd data;

  std::size_t region_count() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(data.cols()); }
};

/// Builds a ScanRecord from a region-major matrix (row i -> region i).
ScanRecord make_scan(ScanId id, const Eigen::MatrixXd& samples,
                     const std::vector<std::string>& labels = {});

/// Splits a scan into floor(N/L) non-overlapping windows. Trailing samples
/// that do not fill a window are dropped; L > N gives no chunks.
std::vector<Chunk> partition_into_chunks(const ScanRecord& scan, std::size_t window);

/// Standard deviation below which a row is treated as constant.
inline constexpr double kDegenerateStd = 1e-12;

struct ZScoreResult {
  Chunk chunk;
  std::vector<std::size_t> degenerate_rows;
  std::vector<std::string> warnings;
};

/// Per-row standardization to mean 0 and population std 1. Constant rows
/// become zero rows and are reported in `degenerate_rows`.
ZScoreResult zscore_chunk(const Chunk& chunk);

enum class SplineBoundary { natural, not_a_knot };

/// Inserts `n_insert` spline-interpolated samples between every pair of
/// consecutive samples of each region. Output length is (N-1)*(n_insert+1)+1
/// and original samples are copied through unchanged. Requires N >= 4.
ScanRecord interpolate_temporal(const ScanRecord& scan, std::size_t n_insert,
                                SplineBoundary boundary = SplineBoundary::natural);

/// Second derivatives of the cubic spline through `y` at unit-spaced knots.
std::vector<double> spline_second_derivatives(const std::vector<double>& y,
                                              SplineBoundary boundary);

/// Upsamples a single series; see interpolate_temporal.
std::vector<double> upsample_series(const std::vector<double>& y, std::size_t n_insert,
                                    SplineBoundary boundary);

}  // namespace abn
