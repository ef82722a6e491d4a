#include "tempcov/gridsearch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>

#include "tempcov/errors.hpp"
#include "tempcov/evaluate.hpp"
#include "tempcov/parallel.hpp"

namespace tempcov {

GridSpec GridSpec::published_default(ScenarioKind kind) {
  GridSpec grid;
  if (kind == ScenarioKind::kSudden) {
    grid.lambdas = {0.0, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0};
    grid.phis = {PenaltyKind::kL1};
  } else {
    grid.lambdas = {0.0, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0};
    grid.phis = {PenaltyKind::kL2};
  }
  grid.betas = {1e-9, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7};
  grid.ms = {8};
  return grid;
}

std::size_t GridSpec::num_cells() const {
  return lambdas.size() * ms.size() * betas.size() * phis.size();
}

void GridSpec::validate() const {
  if (lambdas.empty() || ms.empty() || betas.empty() || phis.empty()) {
    throw InvalidArgumentError("grid axes must all be non-empty");
  }
  for (const double lambda : lambdas) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw InvalidArgumentError("grid lambda values must be finite and >= 0");
    }
  }
  for (const int m : ms) {
    if (m < 1) throw InvalidArgumentError("grid m values must be >= 1");
  }
  for (const double beta : betas) {
    if (!(beta > 0.0 && beta < 1.0)) {
      throw InvalidArgumentError("grid beta values must lie in (0, 1)");
    }
  }
}

GridSpec parse_grid_json(const std::string& text, const GridSpec& defaults) {
  const nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw CorruptFileError("grid file is not a JSON object");
  }
  GridSpec grid = defaults;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "lambda") {
        grid.lambdas = value.get<std::vector<double>>();
      } else if (key == "beta") {
        grid.betas = value.get<std::vector<double>>();
      } else if (key == "m") {
        grid.ms = value.get<std::vector<int>>();
      } else if (key == "phi") {
        grid.phis.clear();
        for (const auto& name : value.get<std::vector<std::string>>()) {
          grid.phis.push_back(penalty_from_name(name));
        }
      } else if (key != "version") {
        throw CorruptFileError("grid file has unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw CorruptFileError("grid file key '" + key +
                             "' has the wrong type");
    }
  }
  grid.validate();
  return grid;
}

std::string GridResult::leaderboard_json() const {
  nlohmann::json j;
  j["version"] = 1;
  nlohmann::json rows = nlohmann::json::array();
  for (const GridCell& cell : cells) {
    rows.push_back({{"lambda", cell.lambda},
                    {"beta", cell.beta},
                    {"m", cell.m},
                    {"phi", penalty_name(cell.phi)},
                    {"val_nll", cell.val_nll}});
  }
  j["cells"] = std::move(rows);
  j["best_index"] = best_index;
  j["best"] = {{"lambda", best_config.lambda},
               {"beta", best_config.beta},
               {"m", best_config.m},
               {"phi", penalty_name(best_config.phi)},
               {"val_nll", best_val_nll},
               {"test_nll", test_nll}};
  return j.dump(2);
}

GridResult grid_search(const ScenarioDataset& scenario, const GridSpec& grid,
                       const FitConfig& base, int threads) {
  scenario.validate();
  grid.validate();
  base.validate();

  const TemporalDataset train = dataset_from_blocks(scenario.train);
  const TemporalDataset val = dataset_from_blocks(scenario.val);

  std::vector<FitConfig> configs;
  configs.reserve(grid.num_cells());
  for (const int m : grid.ms) {
    for (const PenaltyKind phi : grid.phis) {
      for (const double lambda : grid.lambdas) {
        for (const double beta : grid.betas) {
          FitConfig cfg = base;
          cfg.m = m;
          cfg.phi = phi;
          cfg.lambda = lambda;
          cfg.beta = beta;
          cfg.threads = 1;
          configs.push_back(cfg);
        }
      }
    }
  }

  // The pooled initialization depends only on m among the swept axes, so
  // compute it once per distinct m and share across cells.
  std::map<int, Eigen::MatrixXd> init_by_m;
  for (const int m : grid.ms) {
    if (!init_by_m.count(m)) {
      FitConfig cfg = base;
      cfg.m = m;
      cfg.threads = 1;
      init_by_m.emplace(m, pooled_init_weights(train, cfg));
    }
  }

  std::vector<TCorexModel> models(configs.size());
  std::vector<double> val_nll(configs.size());
  parallel_for(
      configs.size(),
      [&](std::size_t k) {
        const FitConfig& cfg = configs[k];
        models[k] = fit_with_init(train, cfg, init_by_m.at(cfg.m));
        const std::vector<double> nll = nll_per_period(models[k], val);
        val_nll[k] = std::accumulate(nll.begin(), nll.end(), 0.0) /
                     static_cast<double>(nll.size());
      },
      threads);

  GridResult result;
  result.cells.reserve(configs.size());
  for (std::size_t k = 0; k < configs.size(); ++k) {
    result.cells.push_back(GridCell{configs[k].lambda, configs[k].beta,
                                    configs[k].m, configs[k].phi,
                                    val_nll[k]});
  }
  result.best_index = static_cast<std::size_t>(
      std::min_element(val_nll.begin(), val_nll.end()) - val_nll.begin());
  result.best_config = configs[result.best_index];
  result.best_model = std::move(models[result.best_index]);
  result.best_val_nll = val_nll[result.best_index];

  const TemporalDataset test = dataset_from_blocks(scenario.test);
  const std::vector<double> test_nll = nll_per_period(result.best_model, test);
  result.test_nll = std::accumulate(test_nll.begin(), test_nll.end(), 0.0) /
                    static_cast<double>(test_nll.size());
  return result;
}

}  // namespace tempcov
