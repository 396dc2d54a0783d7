#include "abn/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <utility>
#include <vector>

#include "abn/error.hpp"

namespace abn {
namespace fs = std::filesystem;

namespace {

using Edge = std::pair<Eigen::Index, Eigen::Index>;

std::vector<Edge> candidate_edges(std::size_t regions, bool symmetric) {
  std::vector<Edge> edges;
  const auto m = static_cast<Eigen::Index>(regions);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = symmetric ? i + 1 : 0; j < m; ++j) {
      if (i != j) edges.emplace_back(i, j);
    }
  }
  return edges;
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.isZero(0.0)) return 0.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(a, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

GroundTruthNetwork build_truth(std::size_t regions, const std::vector<Edge>& candidates,
                               double density, bool symmetric, std::mt19937_64& rng) {
  const auto m = static_cast<Eigen::Index>(regions);
  GroundTruthNetwork truth;
  truth.symmetric = symmetric;
  truth.mixing = Eigen::MatrixXd::Zero(m, m);

  std::uniform_real_distribution<double> keep(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(0.5, 1.0);
  for (const auto& [i, j] : candidates) {
    // Draw all three numbers unconditionally so the stream does not depend
    // on which edges survive.
    const double u = keep(rng);
    const double w = magnitude(rng);
    const double sign = keep(rng) < 0.5 ? -1.0 : 1.0;
    if (density < 1.0 && u >= density) continue;
    truth.mixing(i, j) = sign * w;
    if (symmetric) truth.mixing(j, i) = sign * w;
  }

  const double rho = spectral_radius(truth.mixing);
  if (rho > truth.spectral_radius_bound) {
    truth.mixing *= truth.spectral_radius_bound / rho;
    // Scaling by the same factor keeps the twins bitwise equal.
  }
  return truth;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

GroundTruthNetwork generate_ground_truth(std::size_t regions, double density, bool symmetric,
                                         std::uint64_t seed) {
  if (regions < 2) throw InvalidArgument("ground truth needs at least 2 regions");
  if (!(density > 0.0 && density <= 1.0)) throw InvalidArgument("density must be in (0, 1]");
  std::mt19937_64 rng(seed);
  return build_truth(regions, candidate_edges(regions, symmetric), density, symmetric, rng);
}

SimulatedScan simulate_scan(const GroundTruthNetwork& truth, std::size_t n_samples,
                            double noise_sigma, std::uint64_t seed, ScanId id) {
  if (!(noise_sigma > 0.0)) throw InvalidArgument("noise_sigma must be > 0");
  if (n_samples == 0) throw InvalidArgument("n_samples must be > 0");
  const Eigen::Index m = truth.mixing.rows();
  if (!(spectral_radius(truth.mixing) < 1.0)) {
    throw InvalidArgument("ground truth spectral radius must be < 1");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise_sigma);
  SimulatedScan out;
  out.noise.resize(m, static_cast<Eigen::Index>(n_samples));
  for (Eigen::Index t = 0; t < out.noise.cols(); ++t) {
    for (Eigen::Index i = 0; i < m; ++i) out.noise(i, t) = gauss(rng);
  }

  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(m, m) - truth.mixing;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const Eigen::MatrixXd samples = lu.solve(out.noise);
  out.scan = make_scan(std::move(id), samples);
  return out;
}

void SynthConfig::validate() const {
  if (regions < 2) throw InvalidArgument("synthetic data needs at least 2 regions");
  if (subjects == 0 || tasks == 0 || n_per_scan == 0) {
    throw InvalidArgument("subjects, tasks and samples per scan must be positive");
  }
  if (!(noise_sigma > 0.0)) throw InvalidArgument("noise_sigma must be > 0");
  if (!(density > 0.0 && density <= 1.0)) throw InvalidArgument("density must be in (0, 1]");
}

GroundTruthNetwork synthetic_task_truth(const SynthConfig& config, std::size_t task) {
  config.validate();
  std::vector<Edge> candidates = candidate_edges(config.regions, config.symmetric);
  if (config.disjoint_support && config.tasks > 1) {
    std::mt19937_64 deal_rng(derive_seed(config.seed, 0xD15C));
    std::shuffle(candidates.begin(), candidates.end(), deal_rng);
    std::vector<Edge> own;
    for (std::size_t p = task; p < candidates.size(); p += config.tasks) own.push_back(candidates[p]);
    std::sort(own.begin(), own.end());
    candidates = std::move(own);
  }
  std::mt19937_64 rng(derive_seed(config.seed, 1, task));
  return build_truth(config.regions, candidates, config.density, config.symmetric, rng);
}

std::string synthetic_subject_id(std::size_t subject) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sub%03zu", subject + 1);
  return buf;
}

std::string synthetic_task_label(std::size_t task) { return "task" + std::to_string(task); }

DatasetManifest build_synthetic_dataset(const SynthConfig& config, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir);

  DatasetManifest manifest;
  manifest.region_count = config.regions;
  for (std::size_t t = 0; t < config.tasks; ++t) {
    const GroundTruthNetwork truth = synthetic_task_truth(config, t);
    write_csv_matrix(truth.mixing, out_dir / ("truth_" + synthetic_task_label(t) + ".csv"));
    for (std::size_t s = 0; s < config.subjects; ++s) {
      ScanId id{synthetic_subject_id(s), synthetic_task_label(t), "1"};
      const auto sim = simulate_scan(truth, config.n_per_scan, config.noise_sigma,
                                     derive_seed(config.seed, 2, s, t), id);
      const fs::path file = out_dir / (id.subject_id + "_" + id.task_label + ".csv");
      write_scan_csv(sim.scan, file);
      manifest.entries.push_back({file, id});
    }
  }
  std::stable_sort(manifest.entries.begin(), manifest.entries.end(),
                   [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace abn
