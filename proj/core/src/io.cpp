#include "abn/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "abn/error.hpp"

namespace abn {
namespace fs = std::filesystem;
using json = nlohmann::json;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

namespace {

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key + ": " + e.what());
  }
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("manifest: top level must be an object");

  DatasetManifest manifest;
  std::optional<std::size_t> region_count;
  if (doc.contains("region_count")) region_count = required<std::size_t>(doc, "region_count", "manifest");
  if (doc.contains("region_labels")) {
    manifest.region_labels = required<std::vector<std::string>>(doc, "region_labels", "manifest");
  }

  if (doc.contains("entries")) {
    const json& entries = doc.at("entries");
    if (!entries.is_array()) throw ParseError("manifest.entries: must be an array");
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const std::string where = "manifest.entries[" + std::to_string(k) + "]";
      const json& e = entries[k];
      ManifestEntry entry;
      fs::path p = required<std::string>(e, "path", where);
      entry.path = (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
      entry.id.subject_id = required<std::string>(e, "subject", where);
      entry.id.task_label = required<std::string>(e, "task", where);
      entry.id.session_id = e.contains("session") ? required<std::string>(e, "session", where) : "";
      if (e.contains("region_count")) {
        const auto m = required<std::size_t>(e, "region_count", where);
        if (region_count && *region_count != m) {
          throw ParseError(where + ": inconsistent region count (" + std::to_string(m) + " vs " +
                           std::to_string(*region_count) + ")");
        }
        region_count = m;
      }
      manifest.entries.push_back(std::move(entry));
    }
  }

  if (!region_count) {
    if (!manifest.entries.empty()) throw ParseError("manifest: missing field 'region_count'");
    region_count = manifest.region_labels.size();
  }
  manifest.region_count = *region_count;
  if (!manifest.region_labels.empty() && manifest.region_labels.size() != manifest.region_count) {
    throw ParseError("manifest.region_labels: " + std::to_string(manifest.region_labels.size()) +
                     " labels for " + std::to_string(manifest.region_count) + " regions");
  }
  return manifest;
}

DatasetManifest load_manifest(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_manifest(text, path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path();
  json doc;
  doc["region_count"] = manifest.region_count;
  if (!manifest.region_labels.empty()) doc["region_labels"] = manifest.region_labels;
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    fs::path p = e.path;
    if (!base.empty()) {
      const fs::path rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    entries.push_back({{"path", p.generic_string()},
                       {"subject", e.id.subject_id},
                       {"task", e.id.task_label},
                       {"session", e.id.session_id}});
  }
  doc["entries"] = std::move(entries);
  write_text_file(path, doc.dump(2) + "\n");
}

Eigen::MatrixXd parse_csv_matrix(const std::string& text, const std::string& origin) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<double> row;
    std::size_t col = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      ++col;
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw ParseError(origin + ":" + std::to_string(line_no) + ": column " + std::to_string(col) +
                         ": non-numeric cell '" + std::string(cell) + "'");
      }
      if (!std::isfinite(v)) {
        throw ParseError(origin + ":" + std::to_string(line_no) + ": column " + std::to_string(col) +
                         ": non-finite sample");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": ragged row with " +
                       std::to_string(row.size()) + " columns, expected " +
                       std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }

  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto n = static_cast<Eigen::Index>(rows.empty() ? 0 : rows.front().size());
  Eigen::MatrixXd out(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

Eigen::MatrixXd read_csv_matrix(const fs::path& path) {
  return parse_csv_matrix(read_text_file(path), path.string());
}

void write_csv_matrix(const Eigen::MatrixXd& m, const fs::path& path) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      append_number(out, m(i, j));
    }
    out.push_back('\n');
  }
  write_text_file(path, out);
}

void write_scan_csv(const ScanRecord& scan, const fs::path& path) {
  write_csv_matrix(scan.matrix(), path);
}

ScanRecord load_scan(const ManifestEntry& entry, std::size_t expected_m,
                     const std::vector<std::string>& labels) {
  if (!fs::exists(entry.path)) throw Error("scan file not found: " + entry.path.string());
  const Eigen::MatrixXd data = read_csv_matrix(entry.path);
  if (static_cast<std::size_t>(data.rows()) != expected_m) {
    throw ParseError(entry.path.string() + ": region count mismatch (" + std::to_string(data.rows()) +
                     " rows, expected " + std::to_string(expected_m) + ")");
  }
  ScanRecord scan = make_scan(entry.id, data, labels);
  scan.validate();
  return scan;
}

void write_adjacency(const AdjacencyMatrix& adj, const fs::path& stem) {
  fs::path csv = stem;
  csv += ".csv";
  fs::path meta = stem;
  meta += ".json";
  write_csv_matrix(adj.weights, csv);

  const auto& p = adj.provenance;
  json doc;
  doc["estimator"] = std::string(to_string(p.config.kind));
  doc["directed"] = adj.directedness == Directedness::directed;
  doc["regions"] = adj.size();
  doc["lambda"] = p.config.lambda;
  doc["alpha"] = p.config.alpha;
  doc["epochs"] = p.config.epochs;
  doc["epochs_run"] = p.epochs_run;
  doc["tolerance"] = p.config.tolerance;
  doc["zscore"] = p.config.zscore;
  doc["subject"] = p.scan.subject_id;
  doc["task"] = p.scan.task_label;
  doc["session"] = p.scan.session_id;
  doc["chunk_index"] = p.chunk_index;
  doc["csv"] = csv.filename().string();
  write_text_file(meta, doc.dump(2) + "\n");
}

AdjacencyMatrix read_adjacency(const fs::path& stem) {
  fs::path csv = stem;
  csv += ".csv";
  fs::path meta = stem;
  meta += ".json";

  json doc;
  try {
    doc = json::parse(read_text_file(meta));
  } catch (const json::parse_error& e) {
    throw ParseError(meta.string() + ": " + e.what());
  }
  const std::string where = meta.string();

  AdjacencyMatrix adj;
  adj.weights = read_csv_matrix(csv);
  adj.directedness = required<bool>(doc, "directed", where) ? Directedness::directed
                                                           : Directedness::undirected;
  auto& p = adj.provenance;
  p.config.kind = parse_estimator_kind(required<std::string>(doc, "estimator", where));
  p.config.lambda = required<double>(doc, "lambda", where);
  p.config.alpha = required<double>(doc, "alpha", where);
  p.config.epochs = required<std::size_t>(doc, "epochs", where);
  p.config.tolerance = required<double>(doc, "tolerance", where);
  p.config.zscore = required<bool>(doc, "zscore", where);
  p.epochs_run = required<std::size_t>(doc, "epochs_run", where);
  p.scan.subject_id = required<std::string>(doc, "subject", where);
  p.scan.task_label = required<std::string>(doc, "task", where);
  p.scan.session_id = required<std::string>(doc, "session", where);
  p.chunk_index = required<std::size_t>(doc, "chunk_index", where);

  if (required<std::size_t>(doc, "regions", where) != adj.size()) {
    throw ParseError(csv.string() + ": matrix size disagrees with metadata");
  }
  try {
    adj.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(csv.string() + ": " + e.what());
  }
  return adj;
}

}  // namespace abn
