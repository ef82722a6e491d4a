#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "tempcov/dlr.hpp"

namespace tempcov {

enum class PenaltyKind { kL1, kL2 };

std::string penalty_name(PenaltyKind phi);                // "l1" / "l2"
PenaltyKind penalty_from_name(const std::string& name);   // throws on others

// Hyperparameters and reproducibility knobs for fit(); defaults follow the
// training protocol used throughout (Adam 1e-3/0.9/0.999/1e-8, annealing
// 0.6^1..0.6^6 then 0, 500 steps per round, decay cutoff 1e-9).
struct FitConfig {
  int m = 8;
  double lambda = 0.0;
  double beta = 0.5;
  PenaltyKind phi = PenaltyKind::kL1;
  std::vector<double> anneal_schedule = default_anneal_schedule();
  int steps_per_round = 500;
  // The pooled initialization fit reuses the same schedule at half budget.
  int init_steps_per_round = 250;
  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double weight_cutoff = 1e-9;
  double convergence_tol = 1e-6;
  int convergence_window = 10;
  int threads = 0;  // 0 = TEMPCOV_THREADS / hardware default

  static std::vector<double> default_anneal_schedule();
  void validate() const;  // throws InvalidArgumentError
};

// Fitted temporal model: per-period factor weights and covariance estimates
// on the standardized scale, plus the standardization statistics needed to
// score raw data.  Immutable once built; safe to share across threads.
struct TCorexModel {
  std::vector<Eigen::MatrixXd> weights;   // T matrices, m x p
  std::vector<DiagLowRank> covariances;   // T, sign +1, unit diagonal
  Eigen::MatrixXd period_means;           // T x p
  Eigen::MatrixXd period_stds;            // T x p
  FitConfig config;

  Eigen::Index num_periods() const {
    return static_cast<Eigen::Index>(covariances.size());
  }
  Eigen::Index num_variables() const {
    return covariances.empty() ? 0 : covariances.front().p();
  }
  Eigen::Index num_factors() const {
    return weights.empty() ? (covariances.empty() ? 0
                                                  : covariances.front().m())
                           : weights.front().rows();
  }

  // Covariance of period t in the original data scale:
  // diag(sigma_t) * Sigma_t * diag(sigma_t), still diag + low-rank.
  DiagLowRank raw_covariance(Eigen::Index t) const;

  void validate() const;
};

// Sidecar policy for save_model: kAuto keeps small models single-file and
// moves bulk arrays of large ones into "<path>.bin".
enum class SidecarPolicy { kAuto, kInline, kSidecar };

void save_model(const TCorexModel& model, const std::string& path,
                SidecarPolicy policy = SidecarPolicy::kAuto);
TCorexModel load_model(const std::string& path);

}  // namespace tempcov
