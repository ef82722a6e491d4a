// Command-line front end over the tempcov C API: synthetic benchmark
// generation, fitting, grid search, evaluation, and scaling benchmarks.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tempcov.h"

namespace {

// Releases a C-API string on scope exit.
struct OwnedString {
  char* value = nullptr;
  ~OwnedString() { tc_string_free(value); }
  std::string str() const { return value != nullptr ? value : ""; }
};

[[noreturn]] void fail(tc_status status) {
  std::cerr << "error: " << tc_last_error() << '\n';
  std::exit(static_cast<int>(status));
}

void check(tc_status status) {
  if (status != TC_OK) fail(status);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) {
    std::cerr << "error: cannot write " << path << '\n';
    std::exit(2);
  }
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_text(out_path, text);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open " << path << '\n';
    std::exit(2);
  }
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct FitFlags {
  tc_fit_options opts;
  bool steps_given = false;

  FitFlags() { tc_fit_options_init(&opts); }

  void attach(CLI::App* cmd, bool with_penalty) {
    cmd->add_option("--seed", opts.seed, "random seed");
    cmd->add_option("--steps", opts.steps_per_round,
                    "optimizer steps per annealing round")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lr", opts.learning_rate, "Adam learning rate")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threads", opts.threads, "worker threads (0 = auto)");
    if (with_penalty) {
      cmd->add_option("--m", opts.m, "number of latent factors")
          ->check(CLI::PositiveNumber);
      cmd->add_option("--lambda", opts.lambda, "temporal penalty strength")
          ->check(CLI::NonNegativeNumber);
      cmd->add_option("--beta", opts.beta, "sample-weight decay in (0,1)");
      cmd->add_option_function<std::string>(
             "--phi",
             [this](const std::string& name) {
               opts.phi = (name == "l2") ? 1 : 0;
             },
             "temporal penalty shape")
          ->check(CLI::IsMember({"l1", "l2"}));
    }
  }

  // Keep the pooled-init budget at half the main budget when the user
  // overrides --steps without saying otherwise.
  const tc_fit_options* finalize() {
    if (steps_given) {
      opts.init_steps_per_round = std::max(1, opts.steps_per_round / 2);
    }
    return &opts;
  }
};

using ScenarioPtr = std::unique_ptr<tc_scenario, decltype(&tc_scenario_free)>;
using DatasetPtr = std::unique_ptr<tc_dataset, decltype(&tc_dataset_free)>;
using ModelPtr = std::unique_ptr<tc_model, decltype(&tc_model_free)>;

ScenarioPtr open_scenario(const std::string& dir) {
  tc_scenario* raw = nullptr;
  check(tc_scenario_read(dir.c_str(), &raw));
  return ScenarioPtr(raw, &tc_scenario_free);
}

DatasetPtr scenario_split(const tc_scenario* scenario, const char* split) {
  tc_dataset* raw = nullptr;
  check(tc_scenario_split(scenario, split, &raw));
  return DatasetPtr(raw, &tc_dataset_free);
}

DatasetPtr csv_dataset(const std::string& path, std::int64_t window) {
  tc_dataset* raw = nullptr;
  check(tc_dataset_from_csv(path.c_str(), window, &raw));
  return DatasetPtr(raw, &tc_dataset_free);
}

std::string changepoint_table(const tc_model* model) {
  const std::int64_t T = tc_model_num_periods(model);
  std::vector<double> scores(static_cast<std::size_t>(T - 1));
  check(tc_changepoint_scores(model, scores.data()));
  std::string text = "# period_boundary score\n";
  for (std::int64_t t = 0; t + 1 < T; ++t) {
    char line[64];
    std::snprintf(line, sizeof line, "%lld %.17g\n",
                  static_cast<long long>(t + 1),
                  scores[static_cast<std::size_t>(t)]);
    text += line;
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tempcov " + std::string(tc_version()) +
               " — time-varying covariance estimation"};
  app.require_subcommand(1);

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic benchmark scenario directory");
  std::string synth_kind = "sudden";
  int synth_p = 128, synth_m = 8, synth_s = 8, synth_T = 10;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--kind", synth_kind, "sudden or smooth")
      ->check(CLI::IsMember({"sudden", "smooth"}));
  synth->add_option("--p", synth_p, "observed variables")->check(CLI::PositiveNumber);
  synth->add_option("--m", synth_m, "latent factors")->check(CLI::PositiveNumber);
  synth->add_option("--s", synth_s, "training samples per period")
      ->check(CLI::PositiveNumber);
  synth->add_option("--T", synth_T, "number of periods")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", synth_out, "output directory")->required();

  // ---- fit ------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "fit a model and write it to disk");
  std::string fit_scenario, fit_input, fit_out, fit_log;
  std::int64_t fit_window = 0;
  FitFlags fit_flags;
  fit->add_option("--scenario", fit_scenario,
                  "scenario directory (fits the train split)");
  fit->add_option("--input", fit_input, "raw CSV of samples");
  fit->add_option("--window", fit_window,
                  "rows per period when fitting a raw CSV");
  fit->add_option("--out", fit_out, "model file to write")->required();
  fit->add_option("--log", fit_log,
                  "fit log path (default: <out>.log.json)");
  fit_flags.attach(fit, /*with_penalty=*/true);

  // ---- grid -----------------------------------------------------------
  auto* grid = app.add_subcommand(
      "grid", "grid search on a scenario's validation split");
  std::string grid_scenario, grid_file, grid_out, grid_report;
  FitFlags grid_flags;
  grid->add_option("--scenario", grid_scenario, "scenario directory")
      ->required();
  grid->add_option("--grid", grid_file,
                   "JSON grid file overriding the default axes");
  grid->add_option("--out", grid_out, "where to save the winning model");
  grid->add_option("--report", grid_report,
                   "leaderboard JSON path (default: stdout)");
  grid_flags.attach(grid, /*with_penalty=*/false);

  // ---- eval -----------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "evaluate a model on test data");
  std::string eval_model, eval_scenario, eval_input, eval_out;
  std::int64_t eval_window = 0;
  bool eval_truth = false, eval_changepoints = false;
  eval->add_option("--model", eval_model, "model file to evaluate");
  eval->add_flag("--truth", eval_truth,
                 "evaluate the scenario's exact generating covariances");
  eval->add_option("--scenario", eval_scenario,
                   "scenario directory (evaluates the test split, adds ARI)");
  eval->add_option("--input", eval_input, "raw CSV of test samples");
  eval->add_option("--window", eval_window,
                   "rows per period when evaluating a raw CSV");
  eval->add_flag("--changepoints", eval_changepoints,
                 "emit change-point scores");
  eval->add_option("--out", eval_out, "report JSON path (default: stdout)");

  // ---- bench ----------------------------------------------------------
  auto* bench = app.add_subcommand(
      "bench", "per-step wall-clock scaling across problem sizes");
  std::vector<std::int64_t> bench_ps;
  int bench_m = 64, bench_T = 10, bench_n = 16, bench_steps = 8;
  std::uint64_t bench_seed = 0;
  std::string bench_out;
  bench->add_option("--p", bench_ps, "problem sizes (repeatable)")
      ->required()
      ->expected(-2);
  bench->add_option("--m", bench_m, "latent factors")->check(CLI::PositiveNumber);
  bench->add_option("--T", bench_T, "periods")->check(CLI::PositiveNumber);
  bench->add_option("--n", bench_n, "samples per period");
  bench->add_option("--steps", bench_steps, "timed steps per size")
      ->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "random seed");
  bench->add_option("--out", bench_out, "table path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // any parse failure is a usage error
  }

  if (synth->parsed()) {
    tc_scenario* raw = nullptr;
    check(tc_scenario_generate(synth_kind.c_str(), synth_p, synth_m, synth_s,
                               synth_T, synth_seed, &raw));
    ScenarioPtr scenario(raw, &tc_scenario_free);
    check(tc_scenario_write(scenario.get(), synth_out.c_str()));
    std::cout << "wrote scenario to " << synth_out << '\n';
    return 0;
  }

  if (fit->parsed()) {
    fit_flags.steps_given = fit->count("--steps") > 0;
    DatasetPtr dataset(nullptr, &tc_dataset_free);
    if (!fit_scenario.empty() && fit_input.empty()) {
      ScenarioPtr scenario = open_scenario(fit_scenario);
      dataset = scenario_split(scenario.get(), "train");
    } else if (!fit_input.empty() && fit_scenario.empty()) {
      if (fit->count("--window") == 0) {
        std::cerr << "error: --input requires --window\n";
        return 1;
      }
      dataset = csv_dataset(fit_input, fit_window);
    } else {
      std::cerr << "error: fit needs exactly one of --scenario or --input\n";
      return 1;
    }
    tc_model* raw_model = nullptr;
    OwnedString log;
    check(tc_fit_logged(dataset.get(), fit_flags.finalize(), &raw_model,
                        &log.value));
    ModelPtr model(raw_model, &tc_model_free);
    check(tc_model_save(model.get(), fit_out.c_str()));
    write_text(fit_log.empty() ? fit_out + ".log.json" : fit_log, log.str());
    std::cout << "wrote model to " << fit_out << '\n';
    return 0;
  }

  if (grid->parsed()) {
    grid_flags.steps_given = grid->count("--steps") > 0;
    ScenarioPtr scenario = open_scenario(grid_scenario);
    std::string grid_json;
    if (!grid_file.empty()) grid_json = read_text(grid_file);
    tc_model* raw_model = nullptr;
    OwnedString leaderboard;
    check(tc_grid_search(scenario.get(),
                         grid_file.empty() ? nullptr : grid_json.c_str(),
                         grid_flags.finalize(), &raw_model,
                         &leaderboard.value));
    ModelPtr model(raw_model, &tc_model_free);
    if (!grid_out.empty()) {
      check(tc_model_save(model.get(), grid_out.c_str()));
    }
    emit(grid_report, leaderboard.str());
    return 0;
  }

  if (eval->parsed()) {
    if (eval_truth == !eval_model.empty()) {
      std::cerr << "error: eval needs exactly one of --model or --truth\n";
      return 1;
    }
    ScenarioPtr scenario(nullptr, &tc_scenario_free);
    DatasetPtr test(nullptr, &tc_dataset_free);
    if (!eval_scenario.empty() && eval_input.empty()) {
      scenario = open_scenario(eval_scenario);
      test = scenario_split(scenario.get(), "test");
    } else if (!eval_input.empty() && eval_scenario.empty()) {
      if (eval->count("--window") == 0) {
        std::cerr << "error: --input requires --window\n";
        return 1;
      }
      test = csv_dataset(eval_input, eval_window);
    } else {
      std::cerr << "error: eval needs exactly one of --scenario or --input\n";
      return 1;
    }
    if (eval_truth && scenario == nullptr) {
      std::cerr << "error: --truth requires --scenario\n";
      return 1;
    }
    ModelPtr model(nullptr, &tc_model_free);
    if (eval_truth) {
      tc_model* raw = nullptr;
      check(tc_scenario_truth_model(scenario.get(), &raw));
      model.reset(raw);
    } else {
      tc_model* raw = nullptr;
      check(tc_model_load(eval_model.c_str(), &raw));
      model.reset(raw);
    }
    OwnedString report;
    check(tc_evaluate(model.get(), test.get(), scenario.get(),
                      eval_changepoints ? 1 : 0, &report.value));
    emit(eval_out, report.str());
    if (eval_changepoints) {
      // Plot-ready companion output: one "boundary score" line per pair.
      std::cout << changepoint_table(model.get());
    }
    return 0;
  }

  if (bench->parsed()) {
    OwnedString table;
    check(tc_benchmark_scaling(bench_ps.data(), bench_ps.size(), bench_m,
                               bench_T, bench_n, bench_steps, bench_seed,
                               &table.value, nullptr));
    emit(bench_out, table.str());
    return 0;
  }

  return 1;
}
