// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "vardro/baselines.hpp"
#include "vardro/errors.hpp"
#include "vardro/experiment.hpp"
#include "vardro/inner_solver.hpp"
#include "vardro/model_kit.hpp"
#include "vardro/schedule.hpp"
#include "vardro/trainer.hpp"
#include "vardro/variance_tracker.hpp"

namespace {

using namespace vardro;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (!out.pass) ++failures;
  std::printf("%s %s (%.2fs) %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), secs,
              out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(20240501);
  const auto start = Clock::now();
  double obj_err = 0.0, w_err = 0.0;
  const int n = 1000;
  for (int k = 0; k < n; ++k) {
    const auto inst = testing::random_instance(rng, 2, 8, 1.0);
    const WeightBox box = box_bounds(inst.budgets, inst.losses.size());
    const auto q = water_fill(inst.losses, box);
    const auto o = lp_oracle(inst.losses, box);
    obj_err = std::max(obj_err, std::abs(robust_objective(inst.losses, q) -
                                         robust_objective(inst.losses, o)));
    for (std::size_t i = 0; i < q.size(); ++i) w_err = std::max(w_err, std::abs(q[i] - o[i]));
  }
  const double secs = seconds_since(start);
  return {obj_err <= 1e-9 && w_err <= 1e-8 && secs < 5.0,
          fmt("instances=1000 max_obj_err=%.3g max_weight_err=%.3g", obj_err, w_err)};
}

ExperimentConfig small_blobs(Method method, std::size_t hidden) {
  ExperimentConfig c;
  c.method = method;
  c.seed = 7;
  c.dataset.blobs = BlobSpec{3, 60, 4, 5.0, 1.0, 0};
  c.dataset.test_per_class = 60;
  c.model.hidden = hidden;
  c.batch_size = 16;
  c.epochs = 3;
  c.learning_rate = 0.2;
  return c;
}

Outcome erm_reduction() {
  for (std::size_t b = 1; b <= 64; ++b) {
    const std::vector<double> zeros(b, 0.0);
    std::vector<double> losses(b);
    for (std::size_t i = 0; i < b; ++i) losses[i] = std::sin(static_cast<double>(i) * 1.7);
    const auto q = water_fill(losses, zeros);
    for (double w : q)
      if (w != 1.0 / static_cast<double>(b)) return {false, "eps=0 not exactly uniform"};
  }
  for (std::size_t hidden : {std::size_t{0}, std::size_t{8}}) {
    const ExperimentConfig erm = small_blobs(Method::kErm, hidden);
    ExperimentConfig var = erm;
    var.method = Method::kVarDro;
    const Splits splits = build_splits(erm);
    std::vector<std::vector<double>> a, b;
    TrainOptions oa, ob;
    oa.on_epoch = [&](const EpochDiagnostics&, const ModelParams& m) { a.push_back(m.theta); };
    ob.zero_budgets = true;
    ob.on_epoch = [&](const EpochDiagnostics&, const ModelParams& m) { b.push_back(m.theta); };
    train(erm, TrainingView(splits.train), oa);
    train(var, TrainingView(splits.train), ob);
    if (a.size() != 3 || a != b)
      return {false, "trajectory differs for hidden=" + std::to_string(hidden)};
  }
  return {true, "B=1..64 uniform; 3-epoch trajectories bitwise equal (linear, mlp)"};
}

Outcome kkt_structure() {
  std::mt19937_64 rng(11);
  std::size_t max_interior = 0;
  double worst = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const auto inst = testing::random_instance(rng, 1, 64, 2.0);
    const std::size_t b = inst.losses.size();
    const WeightBox box = box_bounds(inst.budgets, b);
    const auto q = water_fill(inst.losses, box);
    max_interior = std::max(max_interior, count_interior(q, box));
    for (std::size_t i = 0; i < b; ++i) {
      const double s = std::log(static_cast<double>(b) * q[i]);
      worst = std::max(worst, std::abs(s) - inst.budgets[i]);
    }
  }
  return {max_interior <= 1 && worst <= 1e-9,
          fmt("instances=2000 max_interior=%.0f max_bound_excess=%.3g",
              static_cast<double>(max_interior), worst)};
}

// Summation rounding in the objective; far below the oracle tolerance.
constexpr double kRoundingSlack = 1e-12;

Outcome monotonicity() {
  std::mt19937_64 rng(12);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto inst = testing::random_instance(rng, 2, 16, 1.0);
    const double base = robust_objective(inst.losses, water_fill(inst.losses, inst.budgets));
    for (std::size_t i = 0; i < inst.budgets.size(); ++i) {
      auto raised = inst.budgets;
      raised[i] += 0.1;
      const double v = robust_objective(inst.losses, water_fill(inst.losses, raised));
      worst = std::max(worst, base - v);
    }
  }
  return {worst <= kRoundingSlack,
          fmt("instances=100 max_decrease=%.3g slack=%.0e", worst, kRoundingSlack)};
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

Outcome gradient_checks() {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto start = Clock::now();
  double worst = 0.0;
  int draws = 0;
  for (std::size_t hidden : {std::size_t{0}, std::size_t{6}}) {
    for (int k = 0; k < 50; ++k, ++draws) {
      Architecture arch{4, hidden, 3, k % 2 ? Activation::kRelu : Activation::kTanh, true};
      ModelParams m = init_params(arch, 100 + k);
      for (double& t : m.theta) t += 0.3 * normal(rng);
      const std::size_t b = 4;
      Matrix x(b, arch.input_dim);
      for (double& v : x.data) v = normal(rng);
      std::vector<int> y(b);
      for (std::size_t i = 0; i < b; ++i) y[i] = static_cast<int>(rng() % arch.classes);
      const Matrix t = smooth_label_matrix(y, arch.classes, 0.1);
      const Matrix g = per_sample_gradients(m, x, t);
      const double h = 1e-5;
      for (std::size_t i = 0; i < b; ++i) {
        std::vector<double> fd(m.theta.size());
        for (std::size_t p = 0; p < m.theta.size(); ++p) {
          ModelParams up = m, dn = m;
          up.theta[p] += h;
          dn.theta[p] -= h;
          fd[p] = (per_sample_losses(up, x, t)[i] - per_sample_losses(dn, x, t)[i]) / (2 * h);
        }
        worst = std::max(worst, relative_error(g.row(i), fd));
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-4 && secs < 10.0,
          fmt("draws=%.0f max_rel_err=%.3g", draws, worst)};
}

Outcome schedule_compliance() {
  const RampSchedule s{0.05, 0.25, 100, 1000};
  if (s.cap_at(0) != s.eps_start || s.cap_at(s.warmup) != s.eps_start ||
      s.cap_at(s.total_steps) != s.eps_end)
    return {false, "endpoint identity violated"};
  for (std::int64_t t = 1; t <= s.total_steps; ++t)
    if (s.cap_at(t) < s.cap_at(t - 1)) return {false, "cap decreases"};

  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> unit(0.0, 4.0);
  const double eps_min = 0.01;
  double worst = 0.0;
  for (std::int64_t t = 0; t <= s.total_steps; t += 7) {
    std::vector<double> v(32);
    for (double& x : v) x = unit(rng);
    const double cap = s.cap_at(t);
    for (double e : assign_budgets(normalize_variances(v), eps_min, cap))
      worst = std::max({worst, eps_min - e, e - cap});
  }

  int trained = 0;
  for (std::size_t hidden : {std::size_t{0}, std::size_t{8}}) {
    ExperimentConfig c = small_blobs(Method::kVarDro, hidden);
    c.epochs = 10;
    const RampSchedule sched = c.schedule();
    const Splits splits = build_splits(c);
    TrainOptions opts;
    opts.on_batch = [&](const BatchTrace& b) {
      if (b.cap != sched.cap_at(b.step)) worst = std::max(worst, 1.0);
      for (double e : b.budgets) worst = std::max({worst, c.eps_min - e, e - b.cap});
      ++trained;
    };
    train(c, TrainingView(splits.train), opts);
  }
  return {worst <= 0.0,
          fmt("grid=0..1000 endpoints exact, budgets checked on %.0f batches, max_excess=%.3g",
              trained, worst)};
}

double grid_search_two_sample(double rho) {
  double best = 0.5;
  for (int k = 1; k < 500000; ++k) {
    const double q1 = 0.5 + k * 1e-6;
    if (kl_to_uniform(std::vector<double>{q1, 1.0 - q1}) <= rho) best = q1;
  }
  return best;
}

Outcome kl_dro() {
  std::mt19937_64 rng(15);
  double kl_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto inst = testing::random_instance(rng, 2, 32, 1.0);
    const double rho = 0.05 + 0.3 * inst.budgets[0];
    const std::size_t b = inst.losses.size();
    const double top = *std::max_element(inst.losses.begin(), inst.losses.end());
    const auto m = std::count(inst.losses.begin(), inst.losses.end(), top);
    if (rho >= std::log(static_cast<double>(b) / static_cast<double>(m))) continue;
    const auto q = kl_dro_weights(inst.losses, KlBudget{rho});
    kl_err = std::max(kl_err, std::abs(kl_to_uniform(q) - rho));
  }
  const auto q2 = kl_dro_weights(std::vector<double>{1.0, 0.0}, KlBudget{0.1});
  const double grid_err = std::abs(q2[0] - grid_search_two_sample(0.1));
  bool uniform = true;
  for (std::size_t b = 1; b <= 64; ++b) {
    std::vector<double> losses(b);
    for (std::size_t i = 0; i < b; ++i) losses[i] = std::cos(static_cast<double>(i));
    for (double w : kl_dro_weights(losses, KlBudget{0.0}))
      uniform = uniform && w == 1.0 / static_cast<double>(b);
  }
  return {kl_err <= 1e-6 && grid_err <= 1e-5 && uniform,
          fmt("max_kl_err=%.3g grid_err=%.3g rho0_uniform=%.0f", kl_err, grid_err, uniform)};
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint64_t last) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t v = first; v <= last; ++v) s.push_back(v);
  return s;
}

// Shared base for both directional experiments: 3-class blobs in 3-d with
// default optimizer and budget settings.
ExperimentConfig directional_base() {
  ExperimentConfig c;
  c.dataset.generator = Generator::kBlobs;
  c.dataset.blobs = BlobSpec{3, 100, 3, 4.0, 1.0, 0};
  c.dataset.test_per_class = 100;
  c.output_dir = "unused";
  return c;
}

const std::vector<Method> kMethods = {Method::kErm, Method::kKlDro, Method::kVarDro};

std::map<Method, std::vector<double>> per_method(
    const SweepResult& sweep, const std::function<double(const ExperimentResult&)>& f) {
  std::map<Method, std::vector<double>> out;
  for (const ExperimentResult& r : sweep.runs) out[r.config.method].push_back(f(r));
  return out;
}

Outcome directional_outliers() {
  ExperimentConfig c = directional_base();
  c.dataset.outlier_fraction = 0.3;
  const auto seeds = seed_range(1, 9);
  const auto start = Clock::now();
  const SweepResult sweep = run_sweep(c, kMethods, seeds, false);
  const double secs = seconds_since(start);
  const auto acc = per_method(sweep, [](const ExperimentResult& r) {
    return r.summary["final"]["test"]["groups"]["outlier"].get<double>();
  });
  const auto& erm = acc.at(Method::kErm);
  const auto& var = acc.at(Method::kVarDro);
  std::printf("  outlier-test accuracy per seed (seed: erm kl_dro var_dro delta)\n");
  for (std::size_t i = 0; i < seeds.size(); ++i)
    std::printf("  %2llu: %.4f %.4f %.4f %+.4f\n", static_cast<unsigned long long>(seeds[i]),
                erm[i], acc.at(Method::kKlDro)[i], var[i], var[i] - erm[i]);
  const double me = median(erm), mk = median(acc.at(Method::kKlDro)), mv = median(var);
  std::printf("  median: erm %.4f kl_dro %.4f var_dro %.4f\n", me, mk, mv);
  return {mv >= me && secs <= 300.0,
          fmt("seeds=9 median var_dro-erm=%+.4f kl_dro-erm=%+.4f", mv - me, mk - me)};
}

Outcome directional_shift() {
  ExperimentConfig c = directional_base();
  c.dataset.corruptions = all_corruptions();
  const auto seeds = seed_range(1, 9);
  const auto start = Clock::now();
  const SweepResult sweep = run_sweep(c, kMethods, seeds, false);
  const double secs = seconds_since(start);

  std::printf("  per-severity test accuracy, median over %zu seeds\n", seeds.size());
  std::printf("  %-8s", "method");
  for (Corruption kind : all_corruptions()) {
    for (int s = 1; s <= kMaxSeverity; ++s)
      std::printf(" %s", (to_string(kind).substr(0, 5) + "_s" + std::to_string(s)).c_str());
    std::printf(" %-7s", (to_string(kind).substr(0, 5) + "_avg").c_str());
  }
  std::printf(" grand\n");
  std::map<Method, double> grand;
  for (Method m : kMethods) {
    std::printf("  %-8s", to_string(m).c_str());
    for (Corruption kind : all_corruptions()) {
      const std::string fam = to_string(kind);
      for (int s = 1; s <= kMaxSeverity; ++s) {
        std::vector<double> v;
        for (const ExperimentResult& r : sweep.runs)
          if (r.config.method == m)
            v.push_back(r.summary["corruptions"]["families"][fam]["severities"]
                                 [std::to_string(s)].get<double>());
        std::printf(" %*.4f", static_cast<int>(fam.substr(0, 5).size() + 3), median(v));
      }
      std::vector<double> v;
      for (const ExperimentResult& r : sweep.runs)
        if (r.config.method == m)
          v.push_back(r.summary["corruptions"]["families"][fam]["mean"].get<double>());
      std::printf(" %-9.4f", median(v));
    }
    std::vector<double> g;
    for (const ExperimentResult& r : sweep.runs)
      if (r.config.method == m) g.push_back(r.summary["corruptions"]["grand_mean"].get<double>());
    grand[m] = median(g);
    std::printf(" %.4f\n", grand[m]);
  }
  const double d = grand[Method::kVarDro] - grand[Method::kErm];
  return {d >= 0.0 && secs <= 600.0,
          fmt("seeds=9 median grand var_dro-erm=%+.4f kl_dro-erm=%+.4f", d,
              grand[Method::kKlDro] - grand[Method::kErm])};
}

Outcome determinism() {
  ExperimentConfig c = directional_base();
  c.dataset.outlier_fraction = 0.3;
  c.dataset.corruptions = all_corruptions();
  c.model.hidden = 8;
  c.epochs = 5;
  c.eval_at_epochs = {2};
  for (Method m : kMethods) {
    c.method = m;
    const std::string a = metrics_csv(run_training(c).metrics);
    const std::string b = metrics_csv(run_training(c).metrics);
    if (a != b) return {false, "metrics differ for " + to_string(m)};
  }
  const SweepResult s1 = run_sweep(c, kMethods, {3, 4}, false);
  const SweepResult s2 = run_sweep(c, kMethods, {3, 4}, false);
  for (std::size_t i = 0; i < s1.runs.size(); ++i)
    if (metrics_csv(s1.runs[i].metrics) != metrics_csv(s2.runs[i].metrics))
      return {false, "parallel sweep metrics differ"};
  return {true, "repeated runs and sweeps give byte-identical metrics CSV"};
}

}  // namespace

int main() {
  report("oracle_equivalence", oracle_equivalence);
  report("erm_reduction", erm_reduction);
  report("kkt_structure", kkt_structure);
  report("monotonicity", monotonicity);
  report("gradient_checks", gradient_checks);
  report("schedule_budget_compliance", schedule_compliance);
  report("kl_dro_baseline", kl_dro);
  report("directional_outliers", directional_outliers);
  report("directional_shift", directional_shift);
  report("determinism", determinism);
  std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
