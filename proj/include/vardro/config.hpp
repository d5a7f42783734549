#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vardro/dataset.hpp"
#include "vardro/model_kit.hpp"
#include "vardro/schedule.hpp"

namespace vardro {

enum class Method { kErm, kKlDro, kVarDro };

std::string to_string(Method method);
Method method_from_string(const std::string& name);

enum class ScheduleUnit { kEpoch, kIteration };

enum class Generator { kBlobs, kSpurious };

struct DatasetConfig {
  Generator generator = Generator::kBlobs;
  BlobSpec blobs;                    // seed is derived from the run seed
  SpuriousSpec spurious;             // same
  std::size_t test_per_class = 200;
  double test_correlation = 0.5;     // spurious generator only
  double outlier_fraction = 0.0;     // applied to train and test
  double outlier_distance = 4.0;
  std::vector<Corruption> corruptions;  // test-time families
  std::vector<int> severities = {1, 2, 3, 4, 5};

  std::size_t train_size() const;
  std::size_t input_dim() const;
  std::size_t classes() const;
};

struct ModelConfig {
  std::size_t hidden = 0;
  Activation activation = Activation::kTanh;
  bool bias = true;
};

struct ExperimentConfig {
  Method method = Method::kErm;
  DatasetConfig dataset;
  ModelConfig model;
  std::uint64_t seed = 0;

  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  int epochs = 30;
  double momentum = 0.0;
  double weight_decay = 0.0;

  double alpha = 0.05;
  double eps_min = 0.01;
  double eps_start = 0.05;
  double eps_end = 0.25;
  std::optional<std::int64_t> warmup;       // default: 10% of total_steps
  std::optional<std::int64_t> total_steps;  // default: full run length
  ScheduleUnit schedule_unit = ScheduleUnit::kEpoch;
  double variance_guard = 1e-8;

  double label_smoothing = 0.1;
  double rho = 0.1;

  std::vector<int> eval_at_epochs;
  std::string output_dir = "runs";

  std::size_t batches_per_epoch() const;
  RampSchedule schedule() const;
  Architecture architecture() const;

  // Throws ConfigError naming the first offending field.
  void validate() const;

  nlohmann::json to_json() const;
  // Parses and validates. method, dataset and seed are required; unknown
  // keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& doc);
};

// Stream-separated seed derivation (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace vardro
