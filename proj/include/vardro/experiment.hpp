#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vardro/config.hpp"
#include "vardro/dataset.hpp"
#include "vardro/metrics.hpp"
#include "vardro/model_kit.hpp"
#include "vardro/trainer.hpp"

namespace vardro {

// Environment variable that overrides ExperimentConfig::output_dir.
inline constexpr const char* kOutputRootEnv = "VARDRO_OUTPUT_ROOT";

struct CorruptedSplit {
  Corruption kind;
  int severity;
  std::string name;  // e.g. "gaussian_noise_s3"
  Dataset data;
};

struct Splits {
  Dataset train;
  Dataset test;
  std::vector<CorruptedSplit> corrupted;
};

// Deterministic in the config seed; independent of the method.
Splits build_splits(const ExperimentConfig& config);

struct ExperimentResult {
  ExperimentConfig config;
  ModelParams model;
  std::vector<MetricsRecord> metrics;  // per-epoch train/test, then final corrupted splits
  std::vector<EpochDiagnostics> diagnostics;
  nlohmann::json summary;
};

// Trains and evaluates in memory.
ExperimentResult run_training(const ExperimentConfig& config, const TrainOptions& options = {});

// Evaluates a checkpoint on every evaluation split the config describes.
std::vector<MetricsRecord> evaluate_checkpoint(const ModelParams& model,
                                               const ExperimentConfig& config);

std::string metrics_csv(const std::vector<MetricsRecord>& metrics);

std::filesystem::path output_root(const ExperimentConfig& config);
std::string run_name(const ExperimentConfig& config);

// Writes config.json, metrics.csv, summary.json and model.json into dir.
// Throws IoError naming the failing path.
void write_bundle(const ExperimentResult& result, const std::filesystem::path& dir);

// run_training + write_bundle into output_root / run_name. Returns the
// bundle directory.
std::filesystem::path run_experiment(const ExperimentConfig& config,
                                     ExperimentResult* result_out = nullptr);

struct SweepResult {
  std::vector<ExperimentResult> runs;  // method-major, then seed order
  nlohmann::json summary;
};

// Cross product of methods and seeds over a base config. Runs execute in
// parallel with isolated state; when write is true each run gets its own
// bundle directory and the sweep summary lands in output_root.
SweepResult run_sweep(const ExperimentConfig& base, const std::vector<Method>& methods,
                      const std::vector<std::uint64_t>& seeds, bool write = true);

double median(std::vector<double> values);

// Mean accuracy over severities per corruption family plus their grand
// mean, as JSON: {"families": {name: {"severities": {...}, "mean": x}},
// "grand_mean": y}. Null when the result has no corrupted splits.
nlohmann::json corruption_table(const std::vector<MetricsRecord>& metrics);

}  // namespace vardro
