#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "abn/estimators.hpp"
#include "abn/timeseries.hpp"

namespace abn {

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest directory
  ScanId id;
};

/// A dataset: where each scan lives and what it is labelled with.
///
/// On disk this is a JSON document:
///
///     {
///       "region_count": 90,
///       "region_labels": ["Precentral_L", ...],      (optional)
///       "entries": [
///         {"path": "s01_rest.csv", "subject": "s01", "task": "motor",
///          "session": "1", "region_count": 90},       (region_count optional)
///         ...
///       ]
///     }
///
/// Relative paths are resolved against the manifest's directory.
struct DatasetManifest {
  std::size_t region_count = 0;
  std::vector<std::string> region_labels;
  std::vector<ManifestEntry> entries;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {});

/// Writes paths relative to the manifest directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Reads a headerless CSV of expected_m rows (regions) by N columns.
ScanRecord load_scan(const ManifestEntry& entry, std::size_t expected_m,
                     const std::vector<std::string>& labels = {});

/// Parses CSV text; `origin` is used in error messages.
Eigen::MatrixXd parse_csv_matrix(const std::string& text, const std::string& origin);
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

/// Writes with 17 significant digits so values round-trip exactly.
void write_csv_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path);
void write_scan_csv(const ScanRecord& scan, const std::filesystem::path& path);

/// Writes `<stem>.csv` (full M x M matrix) and `<stem>.json` (metadata).
void write_adjacency(const AdjacencyMatrix& adj, const std::filesystem::path& stem);

/// Reads the pair written by write_adjacency; undirected matrices are
/// checked for exact symmetry.
AdjacencyMatrix read_adjacency(const std::filesystem::path& stem);

/// Reads a whole file; throws Error on failure.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace abn
