#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "tempcov/dlr.hpp"
#include "tempcov/rng.hpp"

namespace tempcov {

// A standardized sample block together with its temporal weight.  The ref may
// alias rows of a larger concatenated matrix; nothing is copied.
struct BlockRef {
  Eigen::Ref<const Eigen::MatrixXd> x;  // s x p
  double alpha = 1.0;
};

// How the unit-variance additive noise on the latent factors
// z_j = w_j . x + eps_j is treated when estimating moments:
//   kSampled  - draw eps and include it in z (training behaviour),
//   kAnalytic - no draw; add the exact +1 to E[z_j^2] (final estimates),
//   kDisabled - no draw, no correction (diagnostics only).
enum class NoiseMode { kSampled, kAnalytic, kDisabled };

// |correlation| values are clamped to this bound before forming B = R/(1-R^2).
inline constexpr double kCorrelationClamp = 1.0 - 1e-6;

// Floor applied to residual variances and latent second moments before logs.
inline constexpr double kVarianceFloor = 1e-12;

// Floor on the diagonal of recovered covariance estimates; keeps them
// positive definite even when the factors explain (numerically) everything.
inline constexpr double kCovarianceDiagFloor = 1e-6;

// Weighted second-order statistics of the latent factors against the data.
// Expectations are sums weighted by alpha_b / N, N = sum_b alpha_b * rows_b.
struct MomentStats {
  Eigen::MatrixXd z;       // n_total x m latent realizations (noise per mode)
  Eigen::VectorXd c;       // n_total normalized sample weights (sums to 1)
  Eigen::MatrixXd m2;      // m x m: z^T diag(c) z, without noise correction
  Eigen::VectorXd xsq;     // p: weighted E[x_i^2]
  Eigen::MatrixXd exz;     // m x p: weighted E[x_i z_j]
  Eigen::VectorXd ez2;     // m: weighted E[z_j^2], floored, +1 when analytic
  Eigen::MatrixXd r_true;  // m x p: exz / sqrt(ez2), unclamped
  Eigen::MatrixXd r_corr;  // m x p: clamped correlations
  Eigen::MatrixXd b;       // m x p: R / (1 - R^2)
  Eigen::VectorXd r_vec;   // p: r_i = sum_j R_ji B_ji  (>= 0)
  NoiseMode mode = NoiseMode::kSampled;

  Eigen::Index num_variables() const { return xsq.size(); }
  Eigen::Index num_factors() const { return ez2.size(); }
};

// Latent factor realizations z = x W^T (+ noise when sampled); `rng` is
// consumed block by block in list order and must be non-null iff sampling.
Eigen::MatrixXd latent_factors(const Eigen::Ref<const Eigen::MatrixXd>& w,
                               std::span<const BlockRef> blocks, NoiseMode mode,
                               Rng* rng);

MomentStats compute_moments(const Eigen::Ref<const Eigen::MatrixXd>& w,
                            std::span<const BlockRef> blocks, NoiseMode mode,
                            Rng* rng);

// The factor-model objective
//   sum_i 1/2 log E[(x_i - nu_i(z))^2] + sum_j 1/2 log E[z_j^2]
// evaluated compositionally through the per-sample predictors nu.  `blocks`
// must be the blocks the stats were computed from.
double corex_objective(const MomentStats& stats,
                       std::span<const BlockRef> blocks);

// Covariance implied by the fitted factors, on the standardized scale:
// unit diagonal, off-diagonal (U^T U)_ik with u_ji = B_ji / (1 + r_i).
DiagLowRank covariance_estimate(const MomentStats& stats);

// Contiguous view of one period's weighted samples: the fit keeps every
// period's training rows adjacent in one concatenated matrix, so the fused
// evaluator below runs whole-range matrix products instead of per-block ones.
struct WeightedRows {
  Eigen::Ref<const Eigen::MatrixXd> x;  // n x p
  Eigen::Ref<const Eigen::VectorXd> c;  // n normalized weights, sum(c) = 1
  // Row offsets (ascending, ending at n) delimiting the original blocks;
  // noise is drawn per segment so results line up with the block-list route
  // given the same stream.
  std::span<const Eigen::Index> segment_ends;
};

// Owned flattened form of a block list, viewable as WeightedRows.
struct OwnedRows {
  Eigen::MatrixXd x;
  Eigen::VectorXd c;
  std::vector<Eigen::Index> segment_ends;
  WeightedRows view() const { return {x, c, segment_ends}; }
};
OwnedRows concat_blocks(std::span<const BlockRef> blocks);

// Fused objective + d(objective)/dW for one period.  Algebraically identical
// to corex_objective(compute_moments(...)) given the same rng stream, but
// works through weighted moments (residual variance expanded as
// E[x^2] - 2 E[x nu] + E[nu^2]) so no per-sample predictor matrix is formed;
// cost is a handful of (n x p)(p x m) products.
struct PeriodEval {
  double objective = 0.0;
  Eigen::MatrixXd grad;  // m x p; empty when !want_grad
};
PeriodEval period_objective_gradient(const Eigen::Ref<const Eigen::MatrixXd>& w,
                                     const WeightedRows& rows, NoiseMode mode,
                                     Rng* rng, bool want_grad);

}  // namespace tempcov
