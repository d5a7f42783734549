// Command-line front end: solve, train, sweep, eval.

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vardro/config.hpp"
#include "vardro/errors.hpp"
#include "vardro/experiment.hpp"
#include "vardro/inner_solver.hpp"

namespace {

using nlohmann::json;

enum ExitCode { kOk = 0, kInvalidConfig = 1, kDiverged = 2, kIoFailure = 3 };

std::string read_source(const std::string& path) {
  if (path.empty() || path == "-") {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vardro::IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& path) {
  const std::string text = read_source(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw vardro::ConfigError(path.empty() ? "<stdin>" : path,
                              std::string("invalid JSON: ") + e.what());
  }
}

vardro::ExperimentConfig load_config(const std::string& path) {
  return vardro::ExperimentConfig::from_json(parse_json(path));
}

int cmd_solve(const std::string& input) {
  const json doc = parse_json(input);
  std::vector<double> losses, epsilons;
  try {
    losses = doc.at("losses").get<std::vector<double>>();
    epsilons = doc.at("epsilons").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw vardro::ConfigError("losses/epsilons", e.what());
  }
  const auto weights = vardro::water_fill(losses, epsilons);
  const json out = {{"weights", weights},
                    {"objective", vardro::robust_objective(losses, weights)}};
  std::cout << out.dump() << "\n";
  return kOk;
}

int cmd_train(const std::string& config_path) {
  const auto config = load_config(config_path);
  const auto dir = vardro::run_experiment(config);
  std::cout << dir.string() << "\n";
  return kOk;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_sweep(const std::string& config_path, const std::string& methods_arg,
              const std::string& seeds_arg) {
  const auto base = load_config(config_path);
  std::vector<vardro::Method> methods;
  for (const auto& m : split_list(methods_arg)) methods.push_back(vardro::method_from_string(m));
  std::vector<std::uint64_t> seeds;
  if (seeds_arg.empty()) {
    seeds.push_back(base.seed);
  } else {
    for (const auto& s : split_list(seeds_arg)) {
      try {
        seeds.push_back(std::stoull(s));
      } catch (const std::exception&) {
        throw vardro::ConfigError("seeds", "not an integer: '" + s + "'");
      }
    }
  }
  const auto sweep = vardro::run_sweep(base, methods, seeds);
  std::cout << sweep.summary["rows"].dump(2) << "\n";
  return kOk;
}

int cmd_eval(const std::string& model_path, const std::string& config_path) {
  const auto config = load_config(config_path);
  vardro::ModelParams model;
  try {
    model = vardro::ModelParams::from_json(parse_json(model_path));
  } catch (const json::exception& e) {
    throw vardro::ConfigError("model", e.what());
  }
  if (!(model.arch == config.architecture())) {
    throw vardro::ConfigError("model", "checkpoint architecture does not match the config");
  }
  json out = json::array();
  for (const auto& r : vardro::evaluate_checkpoint(model, config)) {
    json groups = json::object();
    for (const auto& [name, acc] : r.group_accuracy) groups[name] = acc;
    out.push_back({{"split", r.split},
                   {"accuracy", r.accuracy},
                   {"worst_group_accuracy",
                    r.worst_group_accuracy ? json(*r.worst_group_accuracy) : json(nullptr)},
                   {"mean_loss", r.mean_loss},
                   {"groups", groups}});
  }
  std::cout << out.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-sample variance-driven robust reweighting toolkit"};
  app.require_subcommand(1);

  std::string solve_input = "-";
  auto* solve = app.add_subcommand("solve", "Solve the inner reweighting LP from JSON");
  solve->add_option("input", solve_input, "JSON file with losses and epsilons ('-' = stdin)");

  std::string train_config;
  auto* train = app.add_subcommand("train", "Train one configuration");
  train->add_option("config", train_config, "Experiment config JSON")->required();

  std::string sweep_config, sweep_methods = "erm,kl_dro,var_dro", sweep_seeds;
  auto* sweep = app.add_subcommand("sweep", "Train every method x seed combination");
  sweep->add_option("config", sweep_config, "Base experiment config JSON")->required();
  sweep->add_option("--methods", sweep_methods, "Comma-separated methods");
  sweep->add_option("--seeds", sweep_seeds, "Comma-separated seeds (default: config seed)");

  std::string eval_model, eval_config;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a config's datasets");
  eval->add_option("model", eval_model, "Model checkpoint JSON")->required();
  eval->add_option("config", eval_config, "Experiment config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidConfig;
  }

  try {
    if (*solve) return cmd_solve(solve_input);
    if (*train) return cmd_train(train_config);
    if (*sweep) return cmd_sweep(sweep_config, sweep_methods, sweep_seeds);
    if (*eval) return cmd_eval(eval_model, eval_config);
  } catch (const vardro::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const vardro::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const vardro::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidConfig;
  }
  return kOk;
}
