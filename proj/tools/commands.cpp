#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "abn/error.hpp"
#include "abn/estimators.hpp"
#include "abn/experiment.hpp"
#include "abn/io.hpp"
#include "abn/report.hpp"
#include "abn/synth.hpp"

namespace abn::cli {
namespace fs = std::filesystem;

namespace {

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err) {}
  void operator()(const std::string& msg) const { err_ << "[abn] " << msg << '\n'; }

 private:
  std::ostream& err_;
};

std::string number_tag(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')) c = '_';
  }
  return s.empty() ? "_" : s;
}

// Parameters shared by estimate and classify.
struct PipelineOptions {
  std::string manifest;
  std::string out = "out";
  std::string preset = "hcp";
  double alpha = 1e-5;
  std::size_t epochs = 100;
  std::size_t window = 40;
  std::size_t n_insert = 0;
  double tolerance = 0.0;
  std::string spline = "natural";
  bool no_zscore = false;
  unsigned threads = 0;

  CLI::Option* alpha_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* window_opt = nullptr;
  CLI::Option* n_insert_opt = nullptr;

  void add_to(CLI::App& app) {
    app.add_option("-m,--manifest", manifest, "Dataset manifest (JSON)")->required();
    app.add_option("-o,--out", out, "Output directory")->capture_default_str();
    app.add_option("--preset", preset, "Hyperparameter preset: hcp (L=40, alpha=1e-5, 100 epochs) "
                                       "or tol (L=5, alpha=1e-6, 10 epochs, 4 inserted samples)")
        ->check(CLI::IsMember({"hcp", "tol"}))
        ->capture_default_str();
    alpha_opt = app.add_option("--alpha", alpha, "Learning rate for dabn/uabn")
                    ->check(CLI::PositiveNumber);
    epochs_opt = app.add_option("--epochs", epochs, "Gradient descent epochs (cap in convergence mode)")
                     ->check(CLI::PositiveNumber);
    window_opt = app.add_option("-L,--window", window, "Window length in samples")
                     ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
    n_insert_opt = app.add_option("--n-insert", n_insert,
                                  "Spline samples inserted between consecutive samples");
    app.add_option("--tolerance", tolerance,
                   "Stop gradient descent once the gradient infinity-norm is below this (0 = off)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--spline", spline, "Spline end conditions")
        ->check(CLI::IsMember({"natural", "not-a-knot"}))
        ->capture_default_str();
    app.add_flag("--no-zscore", no_zscore, "Do not standardize each region within a window");
    app.add_option("-j,--threads", threads, "Worker threads (0 = all cores)");
  }

  PipelineConfig resolve(EstimatorKind kind, double lambda) const {
    PipelineConfig cfg;
    const bool tol = preset == "tol";
    cfg.window = window_opt->count() ? window : (tol ? 5 : 40);
    cfg.n_insert = n_insert_opt->count() ? n_insert : (tol ? 4 : 0);
    cfg.estimator.alpha = alpha_opt->count() ? alpha : (tol ? 1e-6 : 1e-5);
    cfg.estimator.epochs = epochs_opt->count() ? epochs : (tol ? 10 : 100);
    cfg.estimator.kind = kind;
    cfg.estimator.lambda = lambda;
    cfg.estimator.tolerance = tolerance;
    cfg.estimator.zscore = !no_zscore;
    cfg.spline = spline == "natural" ? SplineBoundary::natural : SplineBoundary::not_a_knot;
    cfg.threads = threads;
    return cfg;
  }
};

struct SynthOptions {
  std::string out = "synthetic";
  SynthConfig config;
  bool shared_support = false;
};

struct EstimateOptions {
  PipelineOptions pipeline;
  std::string kind = "dabn";
  double lambda = 0.0;
};

struct ClassifyOptions {
  PipelineOptions pipeline;
  std::vector<std::string> kinds{"dabn"};
  std::vector<double> lambdas{0, 32, 64, 128, 256, 512};
  std::string protocol = "across";
  std::size_t folds = 3;
  double c = 1.0;
  std::size_t svm_epochs = 200;
  std::uint64_t seed = 0;
};

struct ReportOptions {
  std::vector<std::string> inputs;
  std::string out = "report";
};

int cmd_synth(const SynthOptions& opt, std::ostream& out, const Logger& log) {
  SynthConfig config = opt.config;
  config.disjoint_support = !opt.shared_support;
  const DatasetManifest manifest = build_synthetic_dataset(config, opt.out);
  log("wrote " + std::to_string(manifest.entries.size()) + " scans to " + opt.out);
  out << "scans: " << manifest.entries.size() << "\n"
      << "regions: " << manifest.region_count << "\n"
      << "manifest: " << (fs::path(opt.out) / "manifest.json").string() << "\n";
  return kExitOk;
}

int cmd_estimate(const EstimateOptions& opt, std::ostream& out, const Logger& log) {
  const EstimatorKind kind = parse_estimator_kind(opt.kind);
  const PipelineConfig cfg = opt.pipeline.resolve(kind, opt.lambda);
  cfg.estimator.validate();
  const DatasetManifest manifest = load_manifest(opt.pipeline.manifest);
  const fs::path dir = opt.pipeline.out;
  fs::create_directories(dir);

  const auto outcomes = estimate_dataset(manifest, cfg);
  std::size_t written = 0;
  std::size_t failed = 0;
  for (const auto& o : outcomes) {
    const std::string scan = o.scan.subject_id + "/" + o.scan.task_label + "/" + o.scan.session_id;
    if (!o.ok()) {
      ++failed;
      log("FAILED " + scan + (o.chunk_index ? " chunk " + std::to_string(*o.chunk_index) : "") +
          " [" + o.stage + "]: " + o.error);
      continue;
    }
    for (const auto& w : o.result->warnings) log("warning: " + w);
    const std::string stem = safe_name(o.scan.subject_id) + "_" + safe_name(o.scan.task_label) + "_" +
                             safe_name(o.scan.session_id) + "_c" + std::to_string(*o.chunk_index);
    write_adjacency(o.result->network, dir / stem);
    ++written;
  }
  out << "networks: " << written << "\nfailed: " << failed << "\n";
  return failed ? kExitFailure : kExitOk;
}

int cmd_classify(const ClassifyOptions& opt, std::ostream& out, const Logger& log) {
  const Protocol protocol = parse_protocol(opt.protocol);
  std::vector<EstimatorKind> kinds;
  for (const auto& k : opt.kinds) kinds.push_back(parse_estimator_kind(k));
  if (kinds.empty()) throw InvalidArgument("no estimator given");
  if (opt.lambdas.empty()) throw InvalidArgument("empty lambda grid");
  for (double l : opt.lambdas) {
    if (!(l >= 0.0)) throw InvalidArgument("lambda values must be >= 0");
  }

  const DatasetManifest manifest = load_manifest(opt.pipeline.manifest);
  const fs::path dir = opt.pipeline.out;
  fs::create_directories(dir);

  std::vector<std::pair<EstimatorKind, double>> runs;
  for (auto kind : kinds) {
    if (kind == EstimatorKind::pearson) {
      runs.emplace_back(kind, 0.0);
      continue;
    }
    for (double lambda : opt.lambdas) {
      if (kind == EstimatorKind::ridge && lambda <= 0.0) {
        log("skipping ridge at lambda=" + number_tag(lambda) + ": ridge requires lambda > 0");
        continue;
      }
      runs.emplace_back(kind, lambda);
    }
  }

  std::ostringstream csv;
  csv << cv_report_csv_header() << '\n';
  std::size_t failed = 0;
  out << cv_report_csv_header() << '\n';
  for (const auto& [kind, lambda] : runs) {
    ExperimentConfig exp;
    exp.pipeline = opt.pipeline.resolve(kind, lambda);
    exp.protocol = protocol;
    exp.folds = opt.folds;
    exp.svm = SvmConfig{opt.c, opt.svm_epochs, opt.seed};
    exp.log = [&log](const std::string& m) { log(m); };

    const std::string tag = std::string(to_string(kind)) +
                            (kind == EstimatorKind::pearson ? "" : "_lambda" + number_tag(lambda)) + "_" +
                            std::string(to_string(protocol));
    log("running " + tag);
    CVReport report;
    try {
      report = run_experiment(manifest, exp);
    } catch (const std::exception& e) {
      ++failed;
      log("FAILED " + tag + ": " + e.what());
      continue;
    }
    write_text_file(dir / ("cv_" + tag + ".json"), to_json(report));
    if (protocol == Protocol::within_subject) {
      std::ostringstream subj;
      subj << "subject,mean";
      for (std::size_t f = 0; f < opt.folds; ++f) subj << ",fold" << f;
      subj << '\n';
      for (const auto& s : report.subjects) {
        subj << s.subject_id << ',' << number_tag(s.mean);
        for (double a : s.fold_accuracy) subj << ',' << number_tag(a);
        subj << '\n';
      }
      write_text_file(dir / ("cv_" + tag + "_subjects.csv"), subj.str());
    }
    const std::string row = cv_report_csv_row(report);
    csv << row << '\n';
    out << row << '\n';
  }
  write_text_file(dir / ("cv_summary_" + std::string(to_string(protocol)) + ".csv"), csv.str());
  return failed ? kExitFailure : kExitOk;
}

std::vector<fs::path> collect_report_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p = in;
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.rfind("cv_", 0) == 0 && e.path().extension() == ".json") {
          found.push_back(e.path());
        }
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

int cmd_report(const ReportOptions& opt, std::ostream& out, const Logger& log) {
  const auto files = collect_report_files(opt.inputs);
  std::vector<CVReport> reports;
  for (const auto& f : files) {
    try {
      reports.push_back(cv_report_from_json(read_text_file(f)));
    } catch (const ParseError& e) {
      throw ParseError(f.string() + ": " + e.what());
    }
  }
  const auto tables = build_report_tables(reports);
  const fs::path dir = opt.out;
  for (const auto& table : tables) {
    const std::string name = "table_" + std::string(to_string(table.protocol));
    write_text_file(dir / (name + ".csv"), render_csv(table));
    const std::string md = render_markdown(table);
    write_text_file(dir / (name + ".md"), md);
    out << md << '\n';
  }
  log("merged " + std::to_string(reports.size()) + " reports into " + std::to_string(tables.size()) +
      " table(s) under " + dir.string());
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Logger log(err);
  CLI::App app{"Artificial brain network estimation and task decoding"};
  app.name("abn");
  app.set_config("--config", "", "Read options from a TOML/INI config file");
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with known connectivity");
  synth_cmd->add_option("-o,--out", synth.out, "Output directory (created if missing)")->capture_default_str();
  synth_cmd->add_option("--tasks", synth.config.tasks, "Number of tasks")->capture_default_str();
  synth_cmd->add_option("--subjects", synth.config.subjects, "Number of subjects")->capture_default_str();
  synth_cmd->add_option("--regions", synth.config.regions, "Regions per scan (M)")->capture_default_str();
  synth_cmd->add_option("--samples", synth.config.n_per_scan, "Samples per scan (N)")->capture_default_str();
  synth_cmd->add_option("--noise", synth.config.noise_sigma, "Innovation standard deviation")->capture_default_str();
  synth_cmd->add_option("--density", synth.config.density, "Edge density in (0, 1]")->capture_default_str();
  synth_cmd->add_flag("--symmetric", synth.config.symmetric, "Symmetric ground-truth networks");
  synth_cmd->add_flag("--shared-support", synth.shared_support,
                      "Let tasks draw edges from the same candidate set");
  synth_cmd->add_option("--seed", synth.config.seed, "Random seed")->capture_default_str();

  EstimateOptions estimate;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate one network per window of every scan");
  estimate.pipeline.add_to(*estimate_cmd);
  estimate_cmd->add_option("-k,--kind", estimate.kind, "Estimator")
      ->check(CLI::IsMember({"dabn", "uabn", "ridge", "pearson"}))
      ->capture_default_str();
  estimate_cmd->add_option("-l,--lambda", estimate.lambda, "Regularization strength")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  ClassifyOptions classify;
  auto* classify_cmd = app.add_subcommand("classify", "Cross-validate task decoding over a lambda grid");
  classify.pipeline.add_to(*classify_cmd);
  classify_cmd->add_option("-k,--kind", classify.kinds, "Estimators (comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"dabn", "uabn", "ridge", "pearson"}))
      ->capture_default_str();
  classify_cmd->add_option("--lambdas", classify.lambdas, "Lambda grid (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  classify_cmd->add_option("-p,--protocol", classify.protocol, "within or across")
      ->check(CLI::IsMember({"within", "across"}))
      ->capture_default_str();
  classify_cmd->add_option("--folds", classify.folds, "Cross-validation folds")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();
  classify_cmd->add_option("--C", classify.c, "SVM margin penalty")->check(CLI::PositiveNumber)->capture_default_str();
  classify_cmd->add_option("--svm-epochs", classify.svm_epochs, "SVM training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  classify_cmd->add_option("--seed", classify.seed, "Seed for folds and SVM sample order")->capture_default_str();

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Merge CV report files into accuracy tables");
  report_cmd->add_option("inputs", report.inputs, "CV report JSON files or directories")->required();
  report_cmd->add_option("-o,--out", report.out, "Output directory")->capture_default_str();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("abn");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, out, log);
    if (*estimate_cmd) return cmd_estimate(estimate, out, log);
    if (*classify_cmd) return cmd_classify(classify, out, log);
    if (*report_cmd) return cmd_report(report, out, log);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace abn::cli
