#include "vardro/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vardro/errors.hpp"

namespace vardro {

namespace {

using nlohmann::json;

// Reads typed fields from one JSON object and reports the dotted path of
// whatever is wrong.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(where(""), "expected an object");
  }

  template <typename T>
  void optional(const std::string& key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key), std::string("wrong type: ") + e.what());
    }
  }

  template <typename T>
  void required(const std::string& key, T& out) {
    if (!obj_.contains(key)) throw ConfigError(where(key), "required field is missing");
    optional(key, out);
  }

  const json& child(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }
  bool has(const std::string& key) const { return obj_.contains(key); }

  void reject_unknown() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(where(key), "unknown field");
    }
  }

  std::string where(const std::string& key) const {
    if (prefix_.empty()) return key.empty() ? "<root>" : key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

std::string generator_name(Generator g) {
  return g == Generator::kBlobs ? "blobs" : "spurious";
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::kErm:
      return "erm";
    case Method::kKlDro:
      return "kl_dro";
    case Method::kVarDro:
      return "var_dro";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "erm") return Method::kErm;
  if (name == "kl_dro") return Method::kKlDro;
  if (name == "var_dro") return Method::kVarDro;
  throw ConfigError("method", "expected one of erm, kl_dro, var_dro; got '" + name + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t DatasetConfig::train_size() const {
  return generator == Generator::kBlobs ? blobs.classes * blobs.per_class
                                        : 2 * spurious.per_class;
}

std::size_t DatasetConfig::input_dim() const {
  return generator == Generator::kBlobs ? blobs.dim : 2 + spurious.noise_dims;
}

std::size_t DatasetConfig::classes() const {
  return generator == Generator::kBlobs ? blobs.classes : 2;
}

std::size_t ExperimentConfig::batches_per_epoch() const {
  const std::size_t n = dataset.train_size();
  return batch_size == 0 ? 0 : (n + batch_size - 1) / batch_size;
}

RampSchedule ExperimentConfig::schedule() const {
  RampSchedule s;
  s.eps_start = eps_start;
  s.eps_end = eps_end;
  const std::int64_t run_length =
      schedule_unit == ScheduleUnit::kEpoch
          ? epochs
          : static_cast<std::int64_t>(epochs) * static_cast<std::int64_t>(batches_per_epoch());
  s.total_steps = total_steps.value_or(run_length);
  s.warmup = warmup.value_or(s.total_steps / 10);
  return s;
}

Architecture ExperimentConfig::architecture() const {
  Architecture a;
  a.input_dim = dataset.input_dim();
  a.hidden_dim = model.hidden;
  a.classes = dataset.classes();
  a.activation = model.activation;
  a.bias = model.bias;
  return a;
}

void ExperimentConfig::validate() const {
  const DatasetConfig& d = dataset;
  if (d.generator == Generator::kBlobs) {
    require(d.blobs.classes >= 2, "dataset.classes", "need at least two classes");
    require(d.blobs.per_class >= 1, "dataset.per_class", "must be positive");
    require(d.blobs.dim >= 1, "dataset.dim", "must be positive");
    require(d.blobs.spread >= 0.0, "dataset.spread", "must be nonnegative");
    require(d.blobs.separation >= 0.0, "dataset.separation", "must be nonnegative");
  } else {
    require(d.spurious.per_class >= 1, "dataset.per_class", "must be positive");
    require(d.spurious.correlation > 0.5 && d.spurious.correlation <= 1.0,
            "dataset.correlation", "must lie in (0.5, 1]");
    require(d.test_correlation >= 0.5 && d.test_correlation <= 1.0,
            "dataset.test_correlation", "must lie in [0.5, 1]");
    require(d.spurious.noise >= 0.0, "dataset.noise", "must be nonnegative");
  }
  require(d.test_per_class >= 1, "dataset.test_per_class", "must be positive");
  require(d.outlier_fraction >= 0.0 && d.outlier_fraction < 1.0,
          "dataset.outlier_fraction", "must lie in [0, 1)");
  require(d.outlier_distance >= 3.0, "dataset.outlier_distance",
          "must be at least 3 cluster spreads");
  require(d.outlier_fraction == 0.0 || d.generator == Generator::kBlobs,
          "dataset.outlier_fraction", "outliers are only supported for blobs");
  for (int s : d.severities) {
    require(s >= 1 && s <= kMaxSeverity, "dataset.severities", "severities lie in [1, 5]");
  }

  require(learning_rate > 0.0 && std::isfinite(learning_rate), "lr", "must be positive");
  require(batch_size >= 1, "batch_size", "must be positive");
  require(epochs >= 1, "epochs", "must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "momentum", "must lie in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay", "must be nonnegative");
  require(alpha > 0.0 && alpha < 1.0, "alpha", "must lie in (0, 1)");
  require(eps_min > 0.0, "eps_min", "must be positive");
  require(eps_start >= eps_min, "eps_start", "must be at least eps_min");
  require(eps_end >= eps_start, "eps_end", "must be at least eps_start");
  require(variance_guard > 0.0, "variance_guard", "must be positive");
  require(label_smoothing >= 0.0 && label_smoothing < 1.0, "label_smoothing",
          "must lie in [0, 1)");
  require(rho >= 0.0 && std::isfinite(rho), "rho", "must be finite and nonnegative");

  const RampSchedule s = schedule();
  const std::int64_t last_step =
      schedule_unit == ScheduleUnit::kEpoch
          ? epochs - 1
          : static_cast<std::int64_t>(epochs) * static_cast<std::int64_t>(batches_per_epoch()) - 1;
  require(s.total_steps >= 1, "total_steps", "must be positive");
  require(s.total_steps > last_step, "total_steps", "must cover every training step");
  require(s.warmup >= 0 && s.warmup < s.total_steps, "warmup",
          "must lie in [0, total_steps)");
  for (int e : eval_at_epochs) {
    require(e >= 1 && e <= epochs, "eval_at_epochs", "epochs lie in [1, epochs]");
  }
  require(!output_dir.empty(), "output_dir", "must not be empty");
}

nlohmann::json ExperimentConfig::to_json() const {
  json ds = {{"generator", generator_name(dataset.generator)},
             {"test_per_class", dataset.test_per_class},
             {"outlier_fraction", dataset.outlier_fraction},
             {"outlier_distance", dataset.outlier_distance},
             {"severities", dataset.severities}};
  json kinds = json::array();
  for (Corruption c : dataset.corruptions) kinds.push_back(to_string(c));
  ds["corruptions"] = kinds;
  if (dataset.generator == Generator::kBlobs) {
    ds["classes"] = dataset.blobs.classes;
    ds["per_class"] = dataset.blobs.per_class;
    ds["dim"] = dataset.blobs.dim;
    ds["separation"] = dataset.blobs.separation;
    ds["spread"] = dataset.blobs.spread;
  } else {
    ds["per_class"] = dataset.spurious.per_class;
    ds["correlation"] = dataset.spurious.correlation;
    ds["test_correlation"] = dataset.test_correlation;
    ds["core_strength"] = dataset.spurious.core_strength;
    ds["spurious_strength"] = dataset.spurious.spurious_strength;
    ds["noise"] = dataset.spurious.noise;
    ds["noise_dims"] = dataset.spurious.noise_dims;
  }
  const RampSchedule s = schedule();
  return {{"method", to_string(method)},
          {"dataset", ds},
          {"model",
           {{"hidden", model.hidden},
            {"activation", to_string(model.activation)},
            {"bias", model.bias}}},
          {"seed", seed},
          {"lr", learning_rate},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"momentum", momentum},
          {"weight_decay", weight_decay},
          {"alpha", alpha},
          {"eps_min", eps_min},
          {"eps_start", eps_start},
          {"eps_end", eps_end},
          {"warmup", s.warmup},
          {"total_steps", s.total_steps},
          {"schedule_unit", schedule_unit == ScheduleUnit::kEpoch ? "epoch" : "iteration"},
          {"variance_guard", variance_guard},
          {"label_smoothing", label_smoothing},
          {"rho", rho},
          {"eval_at_epochs", eval_at_epochs},
          {"output_dir", output_dir}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  FieldReader root(doc, "");

  std::string method;
  root.required("method", method);
  c.method = method_from_string(method);
  root.required("seed", c.seed);

  if (!root.has("dataset")) throw ConfigError("dataset", "required field is missing");
  {
    FieldReader ds(root.child("dataset"), "dataset");
    std::string generator;
    ds.required("generator", generator);
    if (generator == "blobs") {
      c.dataset.generator = Generator::kBlobs;
      ds.optional("classes", c.dataset.blobs.classes);
      ds.optional("per_class", c.dataset.blobs.per_class);
      ds.optional("dim", c.dataset.blobs.dim);
      ds.optional("separation", c.dataset.blobs.separation);
      ds.optional("spread", c.dataset.blobs.spread);
    } else if (generator == "spurious") {
      c.dataset.generator = Generator::kSpurious;
      ds.optional("per_class", c.dataset.spurious.per_class);
      ds.optional("correlation", c.dataset.spurious.correlation);
      ds.optional("test_correlation", c.dataset.test_correlation);
      ds.optional("core_strength", c.dataset.spurious.core_strength);
      ds.optional("spurious_strength", c.dataset.spurious.spurious_strength);
      ds.optional("noise", c.dataset.spurious.noise);
      ds.optional("noise_dims", c.dataset.spurious.noise_dims);
    } else {
      throw ConfigError("dataset.generator", "expected blobs or spurious; got '" +
                                                 generator + "'");
    }
    ds.optional("test_per_class", c.dataset.test_per_class);
    ds.optional("outlier_fraction", c.dataset.outlier_fraction);
    ds.optional("outlier_distance", c.dataset.outlier_distance);
    ds.optional("severities", c.dataset.severities);
    std::vector<std::string> kinds;
    ds.optional("corruptions", kinds);
    for (const auto& k : kinds) {
      try {
        c.dataset.corruptions.push_back(corruption_from_string(k));
      } catch (const InvalidArgumentError& e) {
        throw ConfigError("dataset.corruptions", e.what());
      }
    }
    ds.reject_unknown();
  }

  if (root.has("model")) {
    FieldReader m(root.child("model"), "model");
    m.optional("hidden", c.model.hidden);
    std::string act = to_string(c.model.activation);
    m.optional("activation", act);
    try {
      c.model.activation = activation_from_string(act);
    } catch (const InvalidArgumentError& e) {
      throw ConfigError("model.activation", e.what());
    }
    m.optional("bias", c.model.bias);
    m.reject_unknown();
  }

  root.optional("lr", c.learning_rate);
  root.optional("batch_size", c.batch_size);
  root.optional("epochs", c.epochs);
  root.optional("momentum", c.momentum);
  root.optional("weight_decay", c.weight_decay);
  root.optional("alpha", c.alpha);
  root.optional("eps_min", c.eps_min);
  root.optional("eps_start", c.eps_start);
  root.optional("eps_end", c.eps_end);
  if (root.has("warmup")) {
    std::int64_t w = 0;
    root.optional("warmup", w);
    c.warmup = w;
  }
  if (root.has("total_steps")) {
    std::int64_t t = 0;
    root.optional("total_steps", t);
    c.total_steps = t;
  }
  std::string unit = "epoch";
  root.optional("schedule_unit", unit);
  if (unit == "epoch") {
    c.schedule_unit = ScheduleUnit::kEpoch;
  } else if (unit == "iteration") {
    c.schedule_unit = ScheduleUnit::kIteration;
  } else {
    throw ConfigError("schedule_unit", "expected epoch or iteration");
  }
  root.optional("variance_guard", c.variance_guard);
  root.optional("label_smoothing", c.label_smoothing);
  root.optional("rho", c.rho);
  root.optional("eval_at_epochs", c.eval_at_epochs);
  root.optional("output_dir", c.output_dir);
  root.reject_unknown();

  c.validate();
  return c;
}

}  // namespace vardro
