#include "vardro/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vardro/errors.hpp"

namespace vardro {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vardro_test_" + name);
  fs::remove_all(dir);
  return dir;
}

json minimal_config() {
  return json::parse(R"({
    "method": "var_dro",
    "seed": 3,
    "dataset": {"generator": "blobs", "classes": 2, "per_class": 40, "dim": 2,
                "test_per_class": 40, "outlier_fraction": 0.25,
                "corruptions": ["gaussian_noise", "affine_shift"]},
    "epochs": 4,
    "batch_size": 16,
    "eval_at_epochs": [2]
  })");
}

TEST(Config, DefaultsAndRoundTrip) {
  const ExperimentConfig c = ExperimentConfig::from_json(minimal_config());
  EXPECT_EQ(c.method, Method::kVarDro);
  EXPECT_EQ(c.alpha, 0.05);
  EXPECT_EQ(c.eps_min, 0.01);
  EXPECT_EQ(c.eps_start, 0.05);
  EXPECT_EQ(c.eps_end, 0.25);
  EXPECT_EQ(c.label_smoothing, 0.1);
  EXPECT_EQ(c.rho, 0.1);
  EXPECT_EQ(c.schedule().warmup, 0);  // 10% of 4 epochs
  const ExperimentConfig again = ExperimentConfig::from_json(json::parse(c.to_json().dump()));
  EXPECT_EQ(again.to_json(), c.to_json());
}

TEST(Config, RequiredFields) {
  for (const char* key : {"method", "seed", "dataset"}) {
    json doc = minimal_config();
    doc.erase(key);
    try {
      ExperimentConfig::from_json(doc);
      FAIL() << "missing " << key << " accepted";
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.field(), key);
    }
  }
}

TEST(Config, FieldLevelErrors) {
  const std::vector<std::pair<json, std::string>> cases = {
      {{{"method", "sgd"}}, "method"},
      {{{"eps_min", 0.0}}, "eps_min"},
      {{{"eps_start", 0.001}}, "eps_start"},
      {{{"eps_end", 0.01}}, "eps_end"},
      {{{"alpha", 1.0}}, "alpha"},
      {{{"lr", -1.0}}, "lr"},
      {{{"batch_size", 0}}, "batch_size"},
      {{{"warmup", 4}}, "warmup"},
      {{{"total_steps", 2}}, "total_steps"},
      {{{"schedule_unit", "fortnight"}}, "schedule_unit"},
      {{{"label_smoothing", 1.0}}, "label_smoothing"},
      {{{"eval_at_epochs", {9}}}, "eval_at_epochs"},
      {{{"bogus", 1}}, "bogus"},
      {{{"epochs", "ten"}}, "epochs"},
  };
  for (const auto& [patch, field] : cases) {
    json doc = minimal_config();
    doc.merge_patch(patch);
    try {
      ExperimentConfig::from_json(doc);
      FAIL() << "accepted bad " << field;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.field(), field) << e.what();
    }
  }
  json doc = minimal_config();
  doc["dataset"]["outlier_fraction"] = 1.0;
  EXPECT_THROW(ExperimentConfig::from_json(doc), ConfigError);
  doc = minimal_config();
  doc["dataset"]["corruptions"] = {"blur"};
  EXPECT_THROW(ExperimentConfig::from_json(doc), ConfigError);
  doc = minimal_config();
  doc["model"] = {{"activation", "sigmoid"}};
  EXPECT_THROW(ExperimentConfig::from_json(doc), ConfigError);
}

TEST(Evaluate, ConstantPredictionIsChance) {
  const Dataset d = gen_blobs(BlobSpec{2, 50, 2, 6.0, 1.0, 0});
  const Architecture arch{2, 0, 2};
  const ModelParams zero{arch, std::vector<double>(arch.parameter_count(), 0.0)};
  const MetricsRecord r = evaluate(zero, d);
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_NEAR(r.mean_loss, std::log(2.0), 1e-12);
  EXPECT_FALSE(r.worst_group_accuracy.has_value());
}

TEST(Evaluate, PerfectModel) {
  Dataset d = gen_blobs(BlobSpec{2, 50, 2, 6.0, 0.0, 0});
  d.group_names = {"a", "b"};
  d.groups.assign(d.size(), 0);
  d.groups[0] = 1;
  const std::vector<double> losses(d.size(), 0.0);
  const MetricsRecord r = summarize_predictions(d, d.labels, losses, "test", 1);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.worst_group_accuracy, 1.0);
}

TEST(Evaluate, WorstGroupIsMinimum) {
  Dataset d;
  d.classes = 2;
  d.features = Matrix(100, 1);
  d.labels.assign(100, 1);
  d.ids.resize(100);
  d.group_names = {"major", "minor"};
  d.groups.assign(100, 0);
  std::vector<int> predicted(100, 1);
  for (std::size_t i = 90; i < 100; ++i) {
    d.groups[i] = 1;
    predicted[i] = 0;
  }
  const MetricsRecord r =
      summarize_predictions(d, predicted, std::vector<double>(100, 0.0), "test", 1);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.9);
  EXPECT_EQ(r.worst_group_accuracy, 0.0);
  EXPECT_LE(*r.worst_group_accuracy, r.accuracy);
}

TEST(Evaluate, EmptyDatasetRejected) {
  const Architecture arch{2, 0, 2};
  EXPECT_THROW(evaluate(init_params(arch, 0), Dataset{}), InvalidArgumentError);
}

TEST(Splits, IndependentOfMethod) {
  ExperimentConfig a = ExperimentConfig::from_json(minimal_config());
  ExperimentConfig b = a;
  b.method = Method::kErm;
  const Splits sa = build_splits(a);
  const Splits sb = build_splits(b);
  EXPECT_EQ(sa.train.features, sb.train.features);
  EXPECT_EQ(sa.test.features, sb.test.features);
  ASSERT_EQ(sa.corrupted.size(), 10U);
  EXPECT_EQ(sa.corrupted[0].name, "gaussian_noise_s1");
  EXPECT_EQ(sa.train.group_index("outlier"), 1);
}

TEST(RunExperiment, WritesBundleAndIsByteIdentical) {
  ExperimentConfig c = ExperimentConfig::from_json(minimal_config());
  c.output_dir = scratch_dir("bundle").string();
  ExperimentResult result;
  const fs::path dir = run_experiment(c, &result);
  for (const char* f : {"config.json", "metrics.csv", "summary.json", "model.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const std::string csv = slurp(dir / "metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), metrics_csv_header());

  const json summary = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary, result.summary);
  EXPECT_EQ(json::parse(summary.dump()), summary);
  EXPECT_TRUE(summary["eval_at_epochs"].contains("2"));
  EXPECT_EQ(summary["corruptions"]["families"].size(), 2U);
  EXPECT_TRUE(summary["final"]["test"]["groups"].contains("outlier"));

  const ModelParams model = ModelParams::from_json(json::parse(slurp(dir / "model.json")));
  EXPECT_EQ(model.theta, result.model.theta);
  EXPECT_EQ(ExperimentConfig::from_json(json::parse(slurp(dir / "config.json"))).to_json(),
            c.to_json());

  run_experiment(c);
  EXPECT_EQ(slurp(dir / "metrics.csv"), csv);
}

TEST(RunExperiment, EnvironmentOverridesOutputRoot) {
  ExperimentConfig c = ExperimentConfig::from_json(minimal_config());
  c.output_dir = "/nonexistent-root";
  const fs::path root = scratch_dir("env");
  ::setenv(kOutputRootEnv, root.c_str(), 1);
  const fs::path dir = run_experiment(c);
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(dir, root / "var_dro_seed3");
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
}

TEST(RunExperiment, IoFailureNamesPath) {
  const fs::path root = scratch_dir("io");
  fs::create_directories(root);
  std::ofstream(root / "blocker") << "x";
  ExperimentConfig c = ExperimentConfig::from_json(minimal_config());
  c.output_dir = (root / "blocker").string();
  try {
    run_experiment(c);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("blocker"), std::string::npos);
  }
}

TEST(RunSweep, OneRowPerMethod) {
  ExperimentConfig c = ExperimentConfig::from_json(minimal_config());
  c.output_dir = scratch_dir("sweep").string();
  const auto sweep =
      run_sweep(c, {Method::kErm, Method::kKlDro, Method::kVarDro}, {1, 2}, true);
  ASSERT_EQ(sweep.runs.size(), 6U);
  const json& rows = sweep.summary["rows"];
  ASSERT_EQ(rows.size(), 3U);
  EXPECT_EQ(rows[0]["method"], "erm");
  EXPECT_EQ(rows[1]["method"], "kl_dro");
  EXPECT_EQ(rows[2]["method"], "var_dro");
  EXPECT_EQ(rows[2]["seeds"], 2);
  EXPECT_TRUE(rows[0].contains("corruption_grand_mean_median"));
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "sweep_summary.json"));
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "kl_dro_seed2" / "metrics.csv"));

  // Parallel sweep runs equal standalone runs.
  ExperimentConfig single = c;
  single.method = Method::kKlDro;
  single.seed = 2;
  EXPECT_EQ(run_training(single).model.theta, sweep.runs[3].model.theta);
}

TEST(EvaluateCheckpoint, CoversEverySplit) {
  const ExperimentConfig c = ExperimentConfig::from_json(minimal_config());
  const auto result = run_training(c);
  const auto records = evaluate_checkpoint(result.model, c);
  ASSERT_EQ(records.size(), 2U + 10U);
  EXPECT_EQ(records[1].split, "test");
  EXPECT_EQ(records[1].accuracy, result.summary["final"]["test"]["accuracy"].get<double>());
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median({}), InvalidArgumentError);
}

}  // namespace
}  // namespace vardro
