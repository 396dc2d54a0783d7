#include <string>
#include <vector>

#include "abn/error.hpp"
#include "abn/timeseries.hpp"

namespace abn {
namespace {

// Solves the unit-spacing spline system  M[k-1] + 4 M[k] + M[k+1] = rhs[k]
// for k in [first, last] given M[first-1] and M[last+1] (Thomas algorithm).
void solve_interior(std::vector<double>& m, const std::vector<double>& rhs, std::size_t first,
                    std::size_t last) {
  if (first > last) return;
  const std::size_t n = last - first + 1;
  std::vector<double> c(n), d(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t k = first + r;
    double b = 4.0;
    double v = rhs[k];
    if (r == 0) v -= m[k - 1];
    if (r == n - 1) v -= m[k + 1];
    if (r > 0) {
      b -= c[r - 1];
      v -= d[r - 1];
    }
    c[r] = 1.0 / b;
    d[r] = v / b;
  }
  m[last] = d[n - 1];
  for (std::size_t r = n - 1; r-- > 0;) m[first + r] = d[r] - c[r] * m[first + r + 1];
}

}  // namespace

std::vector<double> spline_second_derivatives(const std::vector<double>& y,
                                              SplineBoundary boundary) {
  const std::size_t n = y.size();
  if (n < 4) {
    throw InvalidArgument("cubic spline needs at least 4 samples, got " + std::to_string(n));
  }
  std::vector<double> rhs(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) rhs[k] = 6.0 * (y[k + 1] - 2.0 * y[k] + y[k - 1]);

  std::vector<double> m(n, 0.0);
  if (boundary == SplineBoundary::natural) {
    solve_interior(m, rhs, 1, n - 2);
    return m;
  }

  // Not-a-knot: M[0] = 2 M[1] - M[2] folds the first row into 6 M[1] = rhs[1]
  // (and symmetrically at the right end).
  m[1] = rhs[1] / 6.0;
  m[n - 2] = rhs[n - 2] / 6.0;
  if (n > 4) solve_interior(m, rhs, 2, n - 3);
  m[0] = 2.0 * m[1] - m[2];
  m[n - 1] = 2.0 * m[n - 2] - m[n - 3];
  return m;
}

std::vector<double> upsample_series(const std::vector<double>& y, std::size_t n_insert,
                                    SplineBoundary boundary) {
  if (n_insert == 0) return y;
  const std::vector<double> m = spline_second_derivatives(y, boundary);
  const std::size_t step = n_insert + 1;
  std::vector<double> out;
  out.reserve((y.size() - 1) * step + 1);
  for (std::size_t k = 0; k + 1 < y.size(); ++k) {
    out.push_back(y[k]);
    for (std::size_t q = 1; q < step; ++q) {
      const double s = static_cast<double>(q) / static_cast<double>(step);
      const double r = 1.0 - s;
      out.push_back(r * y[k] + s * y[k + 1] + ((r * r * r - r) * m[k] + (s * s * s - s) * m[k + 1]) / 6.0);
    }
  }
  out.push_back(y.back());
  return out;
}

ScanRecord interpolate_temporal(const ScanRecord& scan, std::size_t n_insert,
                                SplineBoundary boundary) {
  if (scan.n_samples() < 4) {
    throw InvalidArgument("temporal interpolation needs at least 4 samples, got " +
                          std::to_string(scan.n_samples()));
  }
  ScanRecord out = scan;
  for (auto& region : out.series) region.samples = upsample_series(region.samples, n_insert, boundary);
  return out;
}

}  // namespace abn
