#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tempcov/model.hpp"
#include "tempcov/synthetic.hpp"
#include "tempcov/tcorex.hpp"

namespace tempcov {

// Hyperparameter grid.  Cells enumerate in nested order (m, phi, lambda,
// beta); ties in validation NLL resolve toward the earlier cell.
struct GridSpec {
  std::vector<double> lambdas;
  std::vector<int> ms;
  std::vector<double> betas;
  std::vector<PenaltyKind> phis;

  // Published search grids: the sudden-change experiments sweep the l1
  // penalty over {0, 0.03, 0.1, 0.3, 1, 3, 10}, the smooth-change ones the
  // l2 penalty over {0, 0.1, 0.3, 1, 3, 10, 30, 100, 300}; both share
  // beta in {1e-9, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7} and fixed m = 8.
  static GridSpec published_default(ScenarioKind kind);

  std::size_t num_cells() const;
  void validate() const;
};

struct GridCell {
  double lambda = 0.0;
  double beta = 0.0;
  int m = 0;
  PenaltyKind phi = PenaltyKind::kL1;
  double val_nll = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;  // enumeration order
  std::size_t best_index = 0;
  FitConfig best_config;
  TCorexModel best_model;
  double best_val_nll = 0.0;
  double test_nll = 0.0;  // of the winning cell only

  std::string leaderboard_json() const;
};

// Fits every cell on the train split, scores it on the validation split,
// refits nothing — the winner's model is kept — and reports the winner's
// test NLL.  Test data influences nothing but that final number.  base
// supplies every FitConfig field the grid does not sweep.  threads
// parallelizes across cells; each cell runs single-threaded.
GridResult grid_search(const ScenarioDataset& scenario, const GridSpec& grid,
                       const FitConfig& base, int threads = 0);

// Grid file format: {"lambda": [..], "beta": [..], "m": [..],
// "phi": ["l1"|"l2", ..]} — every key optional, absent axes keep the values
// from `defaults`.  Unknown keys or malformed values are rejected.
GridSpec parse_grid_json(const std::string& text, const GridSpec& defaults);

}  // namespace tempcov
