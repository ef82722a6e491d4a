#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tempcov/dataset.hpp"
#include "tempcov/dlr.hpp"
#include "tempcov/model.hpp"

namespace tempcov {

// Objective trace of one annealing round.
struct FitRoundLog {
  double epsilon = 0.0;
  std::vector<double> objectives;  // one entry per optimizer step
  bool converged_early = false;
};

struct FitLog {
  std::vector<FitRoundLog> rounds;
  double final_objective = 0.0;
  double wall_seconds = 0.0;
  std::string to_json_string() const;
};

// sum_{t<T-1} Phi(W_{t+1} - W_t): entrywise l1 or l2 of the flattened
// difference.  The value is exact; only the gradient path regularizes the
// l2 norm at zero (see fit).
double temporal_penalty(std::span<const Eigen::MatrixXd> weights,
                        PenaltyKind phi);

// Full regularized objective sum_t O(W_t) + lambda * penalty at the given
// weights, on an already-standardized dataset, with annealing level epsilon.
// Noise streams are derived from noise_seed exactly as one optimizer step
// with step index `step` would derive them: data annealing noise from
// (noise_seed, kAnnealNoise, step) and period t's latent noise from
// (noise_seed, kLatentNoise, step, t) — so the value is reproducible and
// differentiable as a deterministic function of the weights.
double tcorex_objective(std::span<const Eigen::MatrixXd> weights,
                        const TemporalDataset& standardized,
                        const FitConfig& config, double epsilon,
                        std::uint64_t noise_seed, std::uint64_t step = 0);

// Same evaluation, also returning d(objective)/dW_t for every period.
std::pair<double, std::vector<Eigen::MatrixXd>> tcorex_objective_gradient(
    std::span<const Eigen::MatrixXd> weights,
    const TemporalDataset& standardized, const FitConfig& config,
    double epsilon, std::uint64_t noise_seed, std::uint64_t step = 0);

// Static linear CorEx on one standardized block (the T = 1 special case of
// the trainer, full step budget, no penalty).  Returns the fitted weights and
// the covariance estimate from noise-free (analytic) moments.
struct LinearCorexResult {
  Eigen::MatrixXd weights;  // m x p
  DiagLowRank covariance;
  FitLog log;
};
// The pooled initialization stage of fit() in isolation: linear CorEx on the
// globally standardized concatenation of all periods, at the reduced
// per-round budget, seeded from config.seed.  Independent of lambda and
// beta, so a hyperparameter sweep over them can compute it once per m.
Eigen::MatrixXd pooled_init_weights(const TemporalDataset& raw,
                                    const FitConfig& config);

// fit() with the initial per-period weights supplied by the caller instead
// of the pooled stage.  fit(raw, cfg) == fit_with_init(raw, cfg,
// pooled_init_weights(raw, cfg)) when T > 1.
TCorexModel fit_with_init(const TemporalDataset& raw, const FitConfig& config,
                          const Eigen::MatrixXd& initial_weights,
                          FitLog* log = nullptr);

LinearCorexResult fit_linear_corex(
    const Eigen::Ref<const Eigen::MatrixXd>& standardized, int m,
    const FitConfig& config);

// The temporal estimator: weighted standardization, pooled initialization
// (T > 1), annealed Adam on the regularized objective, final per-period
// covariances from analytic moments.  Deterministic given config.seed.
TCorexModel fit(const TemporalDataset& raw, const FitConfig& config,
                FitLog* log = nullptr);

}  // namespace tempcov
