#include "vardro/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>

#include "vardro/errors.hpp"

namespace vardro {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum Stream : std::uint64_t {
  kTrainData = 10,
  kTestData = 11,
  kOutlierDirections = 12,
  kTrainOutliers = 13,
  kTestOutliers = 14,
  kCorruptionBase = 20,
};

json record_json(const MetricsRecord& r) {
  json groups = json::object();
  for (const auto& [name, acc] : r.group_accuracy) groups[name] = acc;
  json out = {{"accuracy", r.accuracy}, {"mean_loss", r.mean_loss}, {"groups", groups}};
  out["worst_group_accuracy"] =
      r.worst_group_accuracy ? json(*r.worst_group_accuracy) : json(nullptr);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

json build_summary(const ExperimentResult& r) {
  json summary = {{"method", to_string(r.config.method)},
                  {"seed", r.config.seed},
                  {"epochs", r.config.epochs}};
  json final_splits = json::object();
  std::map<int, json> at_epoch;
  for (const MetricsRecord& m : r.metrics) {
    if (m.epoch == r.config.epochs) final_splits[m.split] = record_json(m);
    if (std::find(r.config.eval_at_epochs.begin(), r.config.eval_at_epochs.end(), m.epoch) !=
        r.config.eval_at_epochs.end()) {
      at_epoch[m.epoch][m.split] = record_json(m);
    }
  }
  summary["final"] = final_splits;
  json evals = json::object();
  for (auto& [epoch, splits] : at_epoch) evals[std::to_string(epoch)] = splits;
  summary["eval_at_epochs"] = evals;
  summary["corruptions"] = corruption_table(r.metrics);
  if (!r.diagnostics.empty()) {
    const EpochDiagnostics& d = r.diagnostics.back();
    summary["final_diagnostics"] = {{"cap", d.cap},
                                    {"mean_eps", d.mean_eps},
                                    {"max_eps", d.max_eps},
                                    {"upper_hit_fraction", d.upper_hit_fraction},
                                    {"mean_batch_loss", d.mean_batch_loss},
                                    {"mean_robust_risk", d.mean_robust_risk}};
  }
  return summary;
}

}  // namespace

Splits build_splits(const ExperimentConfig& config) {
  config.validate();
  const DatasetConfig& dc = config.dataset;
  Splits s;
  if (dc.generator == Generator::kBlobs) {
    BlobSpec train_spec = dc.blobs;
    train_spec.seed = derive_seed(config.seed, kTrainData);
    BlobSpec test_spec = dc.blobs;
    test_spec.per_class = dc.test_per_class;
    test_spec.seed = derive_seed(config.seed, kTestData);
    s.train = gen_blobs(train_spec);
    s.test = gen_blobs(test_spec);
    if (dc.outlier_fraction > 0.0) {
      OutlierSpec os;
      os.distance = dc.outlier_distance;
      os.spread = dc.blobs.spread > 0.0 ? dc.blobs.spread : 1.0;
      os.centers = blob_means(train_spec);
      os.direction_seed = derive_seed(config.seed, kOutlierDirections);
      os.seed = derive_seed(config.seed, kTrainOutliers);
      s.train = mix_outliers(s.train, dc.outlier_fraction, os);
      os.seed = derive_seed(config.seed, kTestOutliers);
      s.test = mix_outliers(s.test, dc.outlier_fraction, os);
    }
  } else {
    SpuriousSpec train_spec = dc.spurious;
    train_spec.seed = derive_seed(config.seed, kTrainData);
    SpuriousSpec test_spec = dc.spurious;
    test_spec.per_class = dc.test_per_class;
    test_spec.correlation = dc.test_correlation;
    test_spec.seed = derive_seed(config.seed, kTestData);
    s.train = gen_spurious(train_spec);
    s.test = gen_spurious(test_spec);
  }
  for (Corruption kind : dc.corruptions) {
    const auto stream = kCorruptionBase + static_cast<std::uint64_t>(kind);
    for (int severity : dc.severities) {
      s.corrupted.push_back(
          {kind, severity, to_string(kind) + "_s" + std::to_string(severity),
           corrupt(s.test, kind, severity, derive_seed(config.seed, stream))});
    }
  }
  return s;
}

std::vector<MetricsRecord> evaluate_checkpoint(const ModelParams& model,
                                               const ExperimentConfig& config) {
  const Splits s = build_splits(config);
  std::vector<MetricsRecord> out;
  out.push_back(evaluate(model, s.train, "train", config.epochs));
  out.push_back(evaluate(model, s.test, "test", config.epochs));
  for (const CorruptedSplit& c : s.corrupted) {
    out.push_back(evaluate(model, c.data, c.name, config.epochs));
  }
  return out;
}

ExperimentResult run_training(const ExperimentConfig& config, const TrainOptions& options) {
  const Splits splits = build_splits(config);
  ExperimentResult result{config, {}, {}, {}, {}};

  TrainOptions opts = options;
  opts.on_epoch = [&](const EpochDiagnostics& d, const ModelParams& model) {
    MetricsRecord train_record = evaluate(model, splits.train, "train", d.epoch);
    train_record.mean_eps = d.mean_eps;
    train_record.max_eps = d.max_eps;
    train_record.upper_hit_fraction = d.upper_hit_fraction;
    result.metrics.push_back(std::move(train_record));
    result.metrics.push_back(evaluate(model, splits.test, "test", d.epoch));
    const bool corrupted_now =
        d.epoch == config.epochs ||
        std::find(config.eval_at_epochs.begin(), config.eval_at_epochs.end(), d.epoch) !=
            config.eval_at_epochs.end();
    if (corrupted_now) {
      for (const CorruptedSplit& c : splits.corrupted) {
        result.metrics.push_back(evaluate(model, c.data, c.name, d.epoch));
      }
    }
    if (options.on_epoch) options.on_epoch(d, model);
  };

  TrainResult trained = train(config, TrainingView(splits.train), opts);
  result.model = std::move(trained.model);
  result.diagnostics = std::move(trained.epochs);
  result.summary = build_summary(result);
  return result;
}

std::string metrics_csv(const std::vector<MetricsRecord>& metrics) {
  std::string out = metrics_csv_header() + "\n";
  for (const MetricsRecord& m : metrics) out += to_csv_row(m) + "\n";
  return out;
}

fs::path output_root(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  return fs::path(config.output_dir);
}

std::string run_name(const ExperimentConfig& config) {
  return to_string(config.method) + "_seed" + std::to_string(config.seed);
}

void write_bundle(const ExperimentResult& result, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "config.json", result.config.to_json().dump(2) + "\n");
  write_text(dir / "metrics.csv", metrics_csv(result.metrics));
  write_text(dir / "summary.json", result.summary.dump(2) + "\n");
  write_text(dir / "model.json", result.model.to_json().dump() + "\n");
}

fs::path run_experiment(const ExperimentConfig& config, ExperimentResult* result_out) {
  ExperimentResult result = run_training(config);
  const fs::path dir = output_root(config) / run_name(config);
  write_bundle(result, dir);
  if (result_out != nullptr) *result_out = std::move(result);
  return dir;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgumentError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

json corruption_table(const std::vector<MetricsRecord>& metrics) {
  int last_epoch = 0;
  for (const MetricsRecord& m : metrics) last_epoch = std::max(last_epoch, m.epoch);
  json families = json::object();
  std::vector<double> family_means;
  for (Corruption kind : all_corruptions()) {
    json severities = json::object();
    double total = 0.0;
    int count = 0;
    for (int s = 1; s <= kMaxSeverity; ++s) {
      const std::string name = to_string(kind) + "_s" + std::to_string(s);
      for (const MetricsRecord& m : metrics) {
        if (m.epoch == last_epoch && m.split == name) {
          severities[std::to_string(s)] = m.accuracy;
          total += m.accuracy;
          ++count;
        }
      }
    }
    if (count == 0) continue;
    const double mean = total / count;
    families[to_string(kind)] = {{"severities", severities}, {"mean", mean}};
    family_means.push_back(mean);
  }
  if (family_means.empty()) return nullptr;
  double grand = 0.0;
  for (double m : family_means) grand += m;
  return {{"families", families},
          {"grand_mean", grand / static_cast<double>(family_means.size())}};
}

SweepResult run_sweep(const ExperimentConfig& base, const std::vector<Method>& methods,
                      const std::vector<std::uint64_t>& seeds, bool write) {
  if (methods.empty() || seeds.empty()) {
    throw InvalidArgumentError("a sweep needs at least one method and one seed");
  }
  std::vector<ExperimentConfig> configs;
  for (Method m : methods) {
    for (std::uint64_t s : seeds) {
      ExperimentConfig c = base;
      c.method = m;
      c.seed = s;
      c.validate();
      configs.push_back(std::move(c));
    }
  }

  SweepResult sweep;
  sweep.runs.resize(configs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(configs.size()); ++i) {
    try {
      auto& slot = sweep.runs[static_cast<std::size_t>(i)];
      slot = run_training(configs[static_cast<std::size_t>(i)]);
      if (write) write_bundle(slot, output_root(slot.config) / run_name(slot.config));
    } catch (...) {
#pragma omp critical(vardro_sweep)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  json runs = json::array();
  json rows = json::array();
  for (Method m : methods) {
    std::vector<double> test_acc, worst, grand;
    std::map<std::string, std::vector<double>> family;
    std::map<std::string, std::vector<double>> groups;
    for (const ExperimentResult& r : sweep.runs) {
      if (r.config.method != m) continue;
      runs.push_back(r.summary);
      const json& test = r.summary["final"]["test"];
      test_acc.push_back(test["accuracy"].get<double>());
      if (!test["worst_group_accuracy"].is_null()) {
        worst.push_back(test["worst_group_accuracy"].get<double>());
      }
      for (const auto& [name, acc] : test["groups"].items()) {
        groups[name].push_back(acc.get<double>());
      }
      const json& table = r.summary["corruptions"];
      if (!table.is_null()) {
        grand.push_back(table["grand_mean"].get<double>());
        for (const auto& [name, fam] : table["families"].items()) {
          family[name].push_back(fam["mean"].get<double>());
        }
      }
    }
    json row = {{"method", to_string(m)},
                {"seeds", test_acc.size()},
                {"test_accuracy_median", median(test_acc)}};
    row["test_worst_group_median"] = worst.empty() ? json(nullptr) : json(median(worst));
    json group_medians = json::object();
    for (auto& [name, v] : groups) group_medians[name] = median(v);
    row["test_group_medians"] = group_medians;
    if (!grand.empty()) {
      json fam = json::object();
      for (auto& [name, v] : family) fam[name] = median(v);
      row["corruption_family_medians"] = fam;
      row["corruption_grand_mean_median"] = median(grand);
    }
    rows.push_back(row);
  }
  sweep.summary = {{"rows", rows}, {"runs", runs}};
  if (write) {
    const fs::path root = output_root(base);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
    write_text(root / "sweep_summary.json", sweep.summary.dump(2) + "\n");
  }
  return sweep;
}

}  // namespace vardro
