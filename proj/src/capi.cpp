#include "tempcov.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "tempcov/dataset.hpp"
#include "tempcov/errors.hpp"
#include "tempcov/evaluate.hpp"
#include "tempcov/bench.hpp"
#include "tempcov/csv.hpp"
#include "tempcov/gridsearch.hpp"
#include "tempcov/model.hpp"
#include "tempcov/scenario_io.hpp"
#include "tempcov/synthetic.hpp"
#include "tempcov/tcorex.hpp"
#include "tempcov/version.hpp"

struct tc_dataset {
  tempcov::TemporalDataset data;
};

struct tc_model {
  tempcov::TCorexModel model;
};

struct tc_scenario {
  tempcov::ScenarioDataset scenario;
};

namespace {

thread_local std::string g_last_error;

void set_error(const char* what) { g_last_error = what ? what : "unknown"; }

// Exceptions map onto the three failure classes the status codes expose;
// anything unforeseen counts as numerical so callers never see a throw.
template <typename Fn>
tc_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return TC_OK;
  } catch (const tempcov::InvalidArgumentError& e) {
    set_error(e.what());
    return TC_ERROR_INVALID_ARGUMENT;
  } catch (const tempcov::NotPositiveDefiniteError& e) {
    set_error(e.what());
    return TC_ERROR_NUMERICAL;
  } catch (const tempcov::NumericalError& e) {
    set_error(e.what());
    return TC_ERROR_NUMERICAL;
  } catch (const tempcov::Error& e) {
    set_error(e.what());
    return TC_ERROR_DATA;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return TC_ERROR_NUMERICAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return TC_ERROR_NUMERICAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require_out(const void* pointer, const char* name) {
  if (pointer == nullptr) {
    throw tempcov::InvalidArgumentError(std::string(name) +
                                        " must not be null");
  }
}

tempcov::FitConfig to_config(const tc_fit_options* opts) {
  require_out(opts, "opts");
  tempcov::FitConfig cfg;
  cfg.m = opts->m;
  cfg.lambda = opts->lambda;
  cfg.beta = opts->beta;
  if (opts->phi != 0 && opts->phi != 1) {
    throw tempcov::InvalidArgumentError("phi must be 0 (l1) or 1 (l2)");
  }
  cfg.phi = opts->phi == 0 ? tempcov::PenaltyKind::kL1
                           : tempcov::PenaltyKind::kL2;
  cfg.steps_per_round = opts->steps_per_round;
  cfg.init_steps_per_round = opts->init_steps_per_round;
  cfg.adam_lr = opts->learning_rate;
  cfg.seed = opts->seed;
  cfg.threads = opts->threads;
  cfg.validate();
  return cfg;
}

}  // namespace

extern "C" {

const char* tc_version(void) { return tempcov::kVersionString; }

const char* tc_last_error(void) { return g_last_error.c_str(); }

void tc_string_free(char* s) { std::free(s); }

void tc_fit_options_init(tc_fit_options* opts) {
  if (opts == nullptr) return;
  const tempcov::FitConfig defaults;
  opts->m = defaults.m;
  opts->lambda = defaults.lambda;
  opts->beta = defaults.beta;
  opts->phi = defaults.phi == tempcov::PenaltyKind::kL1 ? 0 : 1;
  opts->steps_per_round = defaults.steps_per_round;
  opts->init_steps_per_round = defaults.init_steps_per_round;
  opts->learning_rate = defaults.adam_lr;
  opts->seed = defaults.seed;
  opts->threads = defaults.threads;
}

tc_status tc_dataset_from_csv(const char* path, int64_t window,
                              tc_dataset** out) {
  return guarded([&] {
    require_out(path, "path");
    require_out(out, "out");
    const Eigen::MatrixXd series = tempcov::read_csv_matrix(path);
    auto handle = std::make_unique<tc_dataset>();
    handle->data = tempcov::window_series(series, window);
    *out = handle.release();
  });
}

void tc_dataset_free(tc_dataset* dataset) { delete dataset; }

int64_t tc_dataset_num_periods(const tc_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->data.num_periods();
}

int64_t tc_dataset_num_variables(const tc_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->data.num_variables();
}

tc_status tc_scenario_generate(const char* kind, int32_t p, int32_t m,
                               int32_t s, int32_t T, uint64_t seed,
                               tc_scenario** out) {
  return guarded([&] {
    require_out(kind, "kind");
    require_out(out, "out");
    tempcov::ScenarioConfig config;
    config.kind = tempcov::scenario_kind_from_name(kind);
    config.p = p;
    config.m = m;
    config.s = s;
    config.T = T;
    config.seed = seed;
    auto handle = std::make_unique<tc_scenario>();
    handle->scenario = tempcov::generate_scenario(config);
    *out = handle.release();
  });
}

tc_status tc_scenario_write(const tc_scenario* scenario, const char* dir) {
  return guarded([&] {
    require_out(scenario, "scenario");
    require_out(dir, "dir");
    tempcov::write_scenario(scenario->scenario, dir);
  });
}

tc_status tc_scenario_read(const char* dir, tc_scenario** out) {
  return guarded([&] {
    require_out(dir, "dir");
    require_out(out, "out");
    auto handle = std::make_unique<tc_scenario>();
    handle->scenario = tempcov::read_scenario(dir);
    *out = handle.release();
  });
}

tc_status tc_scenario_split(const tc_scenario* scenario, const char* split,
                            tc_dataset** out) {
  return guarded([&] {
    require_out(scenario, "scenario");
    require_out(split, "split");
    require_out(out, "out");
    const std::string name(split);
    const std::vector<Eigen::MatrixXd>* blocks = nullptr;
    if (name == "train") {
      blocks = &scenario->scenario.train;
    } else if (name == "val") {
      blocks = &scenario->scenario.val;
    } else if (name == "test") {
      blocks = &scenario->scenario.test;
    } else {
      throw tempcov::InvalidArgumentError(
          "split must be train, val, or test; got '" + name + "'");
    }
    auto handle = std::make_unique<tc_dataset>();
    handle->data = tempcov::dataset_from_blocks(*blocks);
    *out = handle.release();
  });
}

tc_status tc_scenario_truth_model(const tc_scenario* scenario,
                                  tc_model** out) {
  return guarded([&] {
    require_out(scenario, "scenario");
    require_out(out, "out");
    auto handle = std::make_unique<tc_model>();
    handle->model = tempcov::truth_model(scenario->scenario);
    *out = handle.release();
  });
}

void tc_scenario_free(tc_scenario* scenario) { delete scenario; }

tc_status tc_fit(const tc_dataset* dataset, const tc_fit_options* opts,
                 tc_model** out) {
  return tc_fit_logged(dataset, opts, out, nullptr);
}

tc_status tc_fit_logged(const tc_dataset* dataset, const tc_fit_options* opts,
                        tc_model** out, char** log_json) {
  return guarded([&] {
    require_out(dataset, "dataset");
    require_out(out, "out");
    const tempcov::FitConfig cfg = to_config(opts);
    tempcov::FitLog log;
    auto handle = std::make_unique<tc_model>();
    handle->model = tempcov::fit(dataset->data, cfg,
                                 log_json != nullptr ? &log : nullptr);
    if (log_json != nullptr) *log_json = copy_string(log.to_json_string());
    *out = handle.release();
  });
}

tc_status tc_model_save(const tc_model* model, const char* path) {
  return guarded([&] {
    require_out(model, "model");
    require_out(path, "path");
    tempcov::save_model(model->model, path);
  });
}

tc_status tc_model_load(const char* path, tc_model** out) {
  return guarded([&] {
    require_out(path, "path");
    require_out(out, "out");
    auto handle = std::make_unique<tc_model>();
    handle->model = tempcov::load_model(path);
    *out = handle.release();
  });
}

void tc_model_free(tc_model* model) { delete model; }

int64_t tc_model_num_periods(const tc_model* model) {
  return model == nullptr ? 0 : model->model.num_periods();
}

int64_t tc_model_num_variables(const tc_model* model) {
  return model == nullptr ? 0 : model->model.num_variables();
}

int64_t tc_model_num_factors(const tc_model* model) {
  return model == nullptr ? 0 : model->model.num_factors();
}

tc_status tc_model_clusters(const tc_model* model, int64_t period,
                            int32_t* labels_out) {
  return guarded([&] {
    require_out(model, "model");
    require_out(labels_out, "labels_out");
    if (period < 1 || period > model->model.num_periods()) {
      throw tempcov::InvalidArgumentError("period must lie in 1..T");
    }
    const std::vector<int> labels =
        tempcov::cluster_labels(model->model, period - 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels_out[i] = labels[i] + 1;
    }
  });
}

tc_status tc_evaluate(const tc_model* model, const tc_dataset* test,
                      const tc_scenario* truth_or_null,
                      int32_t with_changepoints, char** report_json) {
  return guarded([&] {
    require_out(model, "model");
    require_out(test, "test");
    require_out(report_json, "report_json");
    const Eigen::MatrixXi* labels =
        truth_or_null != nullptr ? &truth_or_null->scenario.labels : nullptr;
    const tempcov::EvalReport report = tempcov::evaluate(
        model->model, test->data, labels, with_changepoints != 0);
    *report_json = copy_string(report.to_json_string());
  });
}

tc_status tc_changepoint_scores(const tc_model* model, double* scores_out) {
  return guarded([&] {
    require_out(model, "model");
    require_out(scores_out, "scores_out");
    const std::vector<double> scores =
        tempcov::changepoint_scores(model->model);
    for (std::size_t i = 0; i < scores.size(); ++i) scores_out[i] = scores[i];
  });
}

tc_status tc_top_changed_variables(const tc_model* model, int64_t boundary,
                                   int32_t k, int32_t* vars_out) {
  return guarded([&] {
    require_out(model, "model");
    require_out(vars_out, "vars_out");
    if (boundary < 1 || boundary >= model->model.num_periods()) {
      throw tempcov::InvalidArgumentError("boundary must lie in 1..T-1");
    }
    const std::vector<int> vars =
        tempcov::top_changed_variables(model->model, boundary - 1, k);
    for (std::size_t i = 0; i < vars.size(); ++i) vars_out[i] = vars[i] + 1;
  });
}

tc_status tc_grid_search(const tc_scenario* scenario,
                         const char* grid_json_or_null,
                         const tc_fit_options* base, tc_model** best_model,
                         char** leaderboard_json) {
  return guarded([&] {
    require_out(scenario, "scenario");
    require_out(best_model, "best_model");
    require_out(leaderboard_json, "leaderboard_json");
    const tempcov::FitConfig base_cfg = to_config(base);
    tempcov::GridSpec grid = tempcov::GridSpec::published_default(
        scenario->scenario.config.kind);
    if (grid_json_or_null != nullptr) {
      grid = tempcov::parse_grid_json(grid_json_or_null, grid);
    }
    tempcov::GridResult result = tempcov::grid_search(
        scenario->scenario, grid, base_cfg, base_cfg.threads);
    *leaderboard_json = copy_string(result.leaderboard_json());
    auto handle = std::make_unique<tc_model>();
    handle->model = std::move(result.best_model);
    *best_model = handle.release();
  });
}

tc_status tc_benchmark_scaling(const int64_t* ps, size_t num_ps, int32_t m,
                               int32_t T, int32_t samples_per_period,
                               int32_t steps, uint64_t seed,
                               char** table_text, double* slope_out) {
  return guarded([&] {
    require_out(ps, "ps");
    std::vector<Eigen::Index> sizes(ps, ps + num_ps);
    const tempcov::BenchResult result = tempcov::benchmark_step_scaling(
        sizes, m, T, samples_per_period, steps, seed);
    if (table_text != nullptr) *table_text = copy_string(result.table_text());
    if (slope_out != nullptr) *slope_out = result.loglog_slope;
  });
}

}  // extern "C"
