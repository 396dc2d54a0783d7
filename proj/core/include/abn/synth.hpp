#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "abn/io.hpp"
#include "abn/timeseries.hpp"

namespace abn {

/// Spectral radius every generated ground truth is scaled down to (at most).
inline constexpr double kSpectralRadiusBound = 0.8;

/// Mixing matrix A of the structural model b_t = A b_t + e_t.
struct GroundTruthNetwork {
  Eigen::MatrixXd mixing;
  bool symmetric = false;
  double spectral_radius_bound = kSpectralRadiusBound;
};

/// Random zero-diagonal matrix with the given off-diagonal edge density,
/// optionally symmetrized, rescaled so its spectral radius is <= 0.8.
/// Each off-diagonal entry (each unordered pair when symmetric) is kept
/// independently with probability `density`; density = 1 keeps all.
GroundTruthNetwork generate_ground_truth(std::size_t regions, double density, bool symmetric,
                                         std::uint64_t seed);

struct SimulatedScan {
  ScanRecord scan;
  Eigen::MatrixXd noise;  // M x N innovations e_t
};

/// Draws e_t ~ N(0, sigma^2 I) and solves (I - A) b_t = e_t for every t.
SimulatedScan simulate_scan(const GroundTruthNetwork& truth, std::size_t n_samples,
                            double noise_sigma, std::uint64_t seed, ScanId id);

struct SynthConfig {
  std::size_t regions = 15;
  std::size_t subjects = 20;
  std::size_t tasks = 2;
  std::size_t n_per_scan = 120;
  double noise_sigma = 1.0;
  double density = 0.3;
  bool symmetric = false;
  /// Give each task's ground truth its own edge set: the off-diagonal pairs
  /// are shuffled and dealt round-robin to tasks before density sampling.
  bool disjoint_support = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Derives a per-stream seed from the base seed and small indices
/// (splitmix64 over the combined words).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Writes one CSV per (subject, task) plus manifest.json into `out_dir`
/// (created if missing) and returns the manifest.
DatasetManifest build_synthetic_dataset(const SynthConfig& config,
                                        const std::filesystem::path& out_dir);

/// Ground truth used for task `task` of a synthetic dataset.
GroundTruthNetwork synthetic_task_truth(const SynthConfig& config, std::size_t task);

std::string synthetic_subject_id(std::size_t subject);
std::string synthetic_task_label(std::size_t task);

}  // namespace abn
