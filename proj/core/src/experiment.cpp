#include "abn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "abn/error.hpp"
#include "abn/parallel.hpp"

namespace abn {
using json = nlohmann::json;

namespace {

std::string scan_name(const ScanId& id) {
  return id.subject_id + "/" + id.task_label + "/" + id.session_id;
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct LoadedScan {
  std::vector<Chunk> chunks;
  std::string stage;
  std::string error;
};

}  // namespace

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::within_subject ? "within" : "across";
}

Protocol parse_protocol(std::string_view text) {
  if (text == "within" || text == "within_subject") return Protocol::within_subject;
  if (text == "across" || text == "across_subject") return Protocol::across_subject;
  throw InvalidArgument("unknown protocol '" + std::string(text) + "' (expected within or across)");
}

std::vector<ChunkOutcome> estimate_dataset(const DatasetManifest& manifest,
                                           const PipelineConfig& config) {
  config.estimator.validate();
  if (config.window < 2) throw InvalidArgument("window length must be >= 2");

  std::vector<std::size_t> order(manifest.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return manifest.entries[a].id < manifest.entries[b].id;
  });

  std::vector<LoadedScan> loaded(order.size());
  parallel_for(order.size(), config.threads, [&](std::size_t k) {
    const ManifestEntry& entry = manifest.entries[order[k]];
    LoadedScan& slot = loaded[k];
    slot.stage = "load";
    try {
      ScanRecord scan = load_scan(entry, manifest.region_count, manifest.region_labels);
      if (config.n_insert > 0) {
        slot.stage = "interpolate";
        scan = interpolate_temporal(scan, config.n_insert, config.spline);
      }
      slot.stage = "chunk";
      slot.chunks = partition_into_chunks(scan, config.window);
      slot.stage.clear();
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  });

  std::vector<ChunkOutcome> outcomes;
  std::vector<const Chunk*> work;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const LoadedScan& slot = loaded[k];
    if (!slot.error.empty()) {
      ChunkOutcome failed;
      failed.scan = manifest.entries[order[k]].id;
      failed.stage = slot.stage;
      failed.error = slot.error;
      outcomes.push_back(std::move(failed));
      work.push_back(nullptr);
      continue;
    }
    for (const Chunk& chunk : slot.chunks) {
      ChunkOutcome pending;
      pending.scan = chunk.id;
      pending.chunk_index = chunk.chunk_index;
      pending.stage = "estimate";
      outcomes.push_back(std::move(pending));
      work.push_back(&chunk);
    }
  }

  parallel_for(work.size(), config.threads, [&](std::size_t k) {
    if (!work[k]) return;
    try {
      outcomes[k].result = estimate_network(*work[k], config.estimator);
      outcomes[k].stage.clear();
    } catch (const std::exception& e) {
      outcomes[k].error = e.what();
    }
  });
  return outcomes;
}

std::vector<Fold> kfold_split(std::span<const FeatureVector> samples, std::size_t k,
                              Protocol protocol, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("need at least 2 folds");
  if (samples.size() < k) {
    throw InvalidArgument("cannot make " + std::to_string(k) + " folds from " +
                          std::to_string(samples.size()) + " samples");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> test(k);

  if (protocol == Protocol::within_subject) {
    for (const auto& s : samples) {
      if (s.subject_id != samples.front().subject_id) {
        throw InvalidArgument("within-subject split given samples from several subjects");
      }
    }
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < samples.size(); ++i) by_label[samples[i].label].push_back(i);
    // Deal each shuffled label group round-robin, continuing the fold cursor
    // across labels so fold sizes differ by at most one.
    std::size_t cursor = 0;
    for (auto& [label, indices] : by_label) {
      std::shuffle(indices.begin(), indices.end(), rng);
      for (std::size_t idx : indices) test[cursor++ % k].push_back(idx);
    }
  } else {
    std::set<std::string> unique;
    for (const auto& s : samples) unique.insert(s.subject_id);
    if (unique.size() < k) {
      throw InvalidArgument("cannot make " + std::to_string(k) + " across-subject folds from " +
                            std::to_string(unique.size()) + " subjects");
    }
    std::vector<std::string> subjects(unique.begin(), unique.end());
    std::shuffle(subjects.begin(), subjects.end(), rng);
    std::map<std::string, std::size_t> fold_of;
    const std::size_t base = subjects.size() / k;
    const std::size_t extra = subjects.size() % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t size = base + (f < extra ? 1 : 0);
      for (std::size_t q = 0; q < size; ++q) fold_of[subjects[pos++]] = f;
    }
    for (std::size_t i = 0; i < samples.size(); ++i) test[fold_of.at(samples[i].subject_id)].push_back(i);
  }

  std::vector<Fold> folds(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(test[f].begin(), test[f].end());
    folds[f].test = test[f];
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), test[g].begin(), test[g].end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

void check_no_subject_leakage(std::span<const FeatureVector> samples, std::span<const Fold> folds) {
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::set<std::string_view> train;
    for (std::size_t i : folds[f].train) train.insert(samples[i].subject_id);
    for (std::size_t i : folds[f].test) {
      if (train.count(samples[i].subject_id)) {
        throw Error("subject " + samples[i].subject_id + " appears in both train and test of fold " +
                    std::to_string(f));
      }
    }
  }
}

double evaluate_fold(std::span<const FeatureVector> samples, const Fold& fold, const SvmConfig& svm) {
  if (fold.train.empty() || fold.test.empty()) throw InvalidArgument("empty train or test fold");
  std::vector<const Eigen::VectorXd*> train_x;
  train_x.reserve(fold.train.size());
  for (std::size_t i : fold.train) train_x.push_back(&samples[i].values);
  const Standardizer scaler(train_x);

  std::vector<Eigen::VectorXd> scaled;
  scaled.reserve(fold.train.size());
  for (std::size_t i : fold.train) scaled.push_back(scaler.apply(samples[i].values));
  std::vector<LabeledSample> train;
  train.reserve(fold.train.size());
  for (std::size_t r = 0; r < fold.train.size(); ++r) {
    train.push_back({&scaled[r], samples[fold.train[r]].label});
  }
  const LinearSVMModel model = train_linear_svm(std::span<const LabeledSample>(train), svm);

  std::size_t correct = 0;
  for (std::size_t i : fold.test) {
    if (predict(model, scaler.apply(samples[i].values)) == samples[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(fold.test.size());
}

std::pair<double, double> mean_and_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

CVReport cross_validate(std::span<const FeatureVector> samples, const ExperimentConfig& config) {
  const unsigned threads = config.pipeline.threads;
  CVReport report;
  report.protocol = config.protocol;
  report.folds = config.folds;
  report.n_samples = samples.size();

  if (config.protocol == Protocol::across_subject) {
    const auto folds = kfold_split(samples, config.folds, config.protocol, config.svm.seed);
    check_no_subject_leakage(samples, folds);
    if (config.log) {
      for (std::size_t f = 0; f < folds.size(); ++f) {
        std::set<std::string_view> tr, te;
        for (std::size_t i : folds[f].train) tr.insert(samples[i].subject_id);
        for (std::size_t i : folds[f].test) te.insert(samples[i].subject_id);
        config.log("fold " + std::to_string(f) + ": " + std::to_string(tr.size()) +
                   " train subjects, " + std::to_string(te.size()) +
                   " test subjects, no subject overlap");
      }
    }
    report.fold_accuracy.resize(folds.size());
    parallel_for(folds.size(), threads, [&](std::size_t f) {
      report.fold_accuracy[f] = evaluate_fold(samples, folds[f], config.svm);
    });
    std::tie(report.mean, report.std) = mean_and_std(report.fold_accuracy);
    return report;
  }

  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < samples.size(); ++i) by_subject[samples[i].subject_id].push_back(i);
  std::vector<std::string> subjects;
  for (const auto& [s, idx] : by_subject) subjects.push_back(s);

  report.subjects.resize(subjects.size());
  parallel_for(subjects.size(), threads, [&](std::size_t s) {
    std::vector<FeatureVector> own;
    for (std::size_t i : by_subject.at(subjects[s])) own.push_back(samples[i]);
    SubjectResult& result = report.subjects[s];
    result.subject_id = subjects[s];
    try {
      const auto folds = kfold_split(own, config.folds, Protocol::within_subject, config.svm.seed);
      for (const auto& fold : folds) result.fold_accuracy.push_back(evaluate_fold(own, fold, config.svm));
    } catch (const Error& e) {
      throw Error("subject " + subjects[s] + ": " + e.what());
    }
    result.mean = mean_and_std(result.fold_accuracy).first;
  });

  std::vector<double> means;
  for (const auto& r : report.subjects) {
    means.push_back(r.mean);
    report.fold_accuracy.insert(report.fold_accuracy.end(), r.fold_accuracy.begin(), r.fold_accuracy.end());
  }
  std::tie(report.mean, report.std) = mean_and_std(means);
  return report;
}

CVReport run_experiment(const DatasetManifest& manifest, const ExperimentConfig& config) {
  const auto outcomes = estimate_dataset(manifest, config.pipeline);
  std::vector<FeatureVector> samples;
  samples.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (!o.ok()) {
      std::string where = scan_name(o.scan);
      if (o.chunk_index) where += " chunk " + std::to_string(*o.chunk_index);
      throw Error(o.stage + " stage failed for " + where + ": " + o.error);
    }
    samples.push_back(vectorize(o.result->network));
  }
  if (samples.empty()) throw Error("no chunks were produced; check window length and scan lengths");

  CVReport report;
  try {
    report = cross_validate(samples, config);
  } catch (const Error& e) {
    throw Error(std::string("classify stage failed: ") + e.what());
  }
  const auto& est = config.pipeline.estimator;
  report.estimator = est.kind;
  if (est.kind != EstimatorKind::pearson) report.lambda = est.lambda;
  if (est.kind == EstimatorKind::dabn || est.kind == EstimatorKind::uabn) {
    report.alpha = est.alpha;
    report.epochs = est.epochs;
  }
  report.window = config.pipeline.window;
  report.n_insert = config.pipeline.n_insert;
  return report;
}

std::string to_json(const CVReport& r) {
  json doc;
  doc["protocol"] = std::string(to_string(r.protocol));
  doc["estimator"] = std::string(to_string(r.estimator));
  doc["lambda"] = r.lambda ? json(*r.lambda) : json(nullptr);
  doc["alpha"] = r.alpha;
  doc["epochs"] = r.epochs;
  doc["window"] = r.window;
  doc["n_insert"] = r.n_insert;
  doc["folds"] = r.folds;
  doc["n_samples"] = r.n_samples;
  doc["fold_accuracy"] = r.fold_accuracy;
  json subjects = json::array();
  for (const auto& s : r.subjects) {
    subjects.push_back({{"subject", s.subject_id}, {"fold_accuracy", s.fold_accuracy}, {"mean", s.mean}});
  }
  doc["subjects"] = std::move(subjects);
  doc["mean"] = r.mean;
  doc["std"] = r.std;
  return doc.dump(2) + "\n";
}

CVReport cv_report_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    CVReport r;
    r.protocol = parse_protocol(doc.at("protocol").get<std::string>());
    r.estimator = parse_estimator_kind(doc.at("estimator").get<std::string>());
    if (!doc.at("lambda").is_null()) r.lambda = doc.at("lambda").get<double>();
    r.alpha = doc.value("alpha", 0.0);
    r.epochs = doc.value("epochs", std::size_t{0});
    r.window = doc.value("window", std::size_t{0});
    r.n_insert = doc.value("n_insert", std::size_t{0});
    r.folds = doc.value("folds", std::size_t{0});
    r.n_samples = doc.value("n_samples", std::size_t{0});
    r.fold_accuracy = doc.value("fold_accuracy", std::vector<double>{});
    if (doc.contains("subjects")) {
      for (const auto& s : doc.at("subjects")) {
        r.subjects.push_back({s.at("subject").get<std::string>(),
                              s.at("fold_accuracy").get<std::vector<double>>(),
                              s.at("mean").get<double>()});
      }
    }
    r.mean = doc.at("mean").get<double>();
    r.std = doc.at("std").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("CV report: ") + e.what());
  }
}

std::string cv_report_csv_header() { return "estimator,lambda,protocol,mean,std"; }

std::string cv_report_csv_row(const CVReport& r) {
  std::ostringstream os;
  os << to_string(r.estimator) << ',' << (r.lambda ? format_number(*r.lambda) : "NA") << ','
     << to_string(r.protocol) << ',' << format_number(r.mean) << ',' << format_number(r.std);
  return os.str();
}

}  // namespace abn
