#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "tempcov/dataset.hpp"
#include "tempcov/dlr.hpp"
#include "tempcov/model.hpp"

namespace tempcov {

// Ground-truth generator: each observed variable has exactly one latent
// parent, x_i = sigma_i * (rho_i * z_{pi_i} + sqrt(1 - rho_i^2) * eps_i)
// with z ~ N(0, I_m) and eps ~ N(0, I_p).
struct ModularModel {
  std::vector<int> pi;    // parent index per variable, 0-based internally
  Eigen::VectorXd rho;    // signal correlations, |rho_i| < 1
  Eigen::VectorXd sigma;  // marginal standard deviations, > 0
  int m = 0;

  Eigen::Index p() const { return static_cast<Eigen::Index>(pi.size()); }
  void validate() const;
};

// Draws pi ~ U{1..m}, sigma ~ U[1/4, 4], snr ~ U[0, 5] with
// rho = sgn(xi) * sqrt(snr / (snr + 1)), xi ~ N(0, 1).  Each field is drawn
// for all variables before the next field starts.
ModularModel sample_modular_model(int p, int m, std::uint64_t seed);

// Exact covariance of the model in raw (unstandardized) space:
// diagonal sigma_i^2, off-diagonal sigma_i sigma_k rho_i rho_k when the
// variables share a parent.  Encoded with u(j, i) = sigma_i rho_i at
// pi_i = j and d_i = sigma_i^2 (1 - rho_i^2).
DiagLowRank model_covariance(const ModularModel& model);

// Same structure rescaled to correlations: u(j, i) = rho_i, d_i = 1 - rho_i^2.
DiagLowRank model_correlation(const ModularModel& model);

// n i.i.d. samples from the model, one row per sample.  The latent draws
// come before the noise draws so that fixing the seed freezes both.
Eigen::MatrixXd sample_data(const ModularModel& model, Eigen::Index n,
                            std::uint64_t seed);

enum class ScenarioKind { kSudden, kSmooth };

std::string scenario_kind_name(ScenarioKind kind);
ScenarioKind scenario_kind_from_name(const std::string& name);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kSudden;
  int p = 128;
  int m = 8;
  int s = 8;  // training samples per period
  int T = 10;
  std::uint64_t seed = 0;
  int val_samples = 16;
  int test_samples = 1000;

  void validate() const;
};

// A full benchmark instance: per-period train/val/test splits plus the exact
// generating covariance and parent labels of every period.
struct ScenarioDataset {
  ScenarioConfig config;
  std::vector<Eigen::MatrixXd> train;  // T blocks, s x p
  std::vector<Eigen::MatrixXd> val;    // T blocks, val_samples x p
  std::vector<Eigen::MatrixXd> test;   // T blocks, test_samples x p
  std::vector<DiagLowRank> truth;      // raw-space covariance per period
  Eigen::MatrixXi labels;              // T x p parent indices, 0-based

  Eigen::Index num_periods() const {
    return static_cast<Eigen::Index>(train.size());
  }
  Eigen::Index num_variables() const { return labels.cols(); }
  void validate() const;
};

// Sudden change: periods 1..T/2 share one independently drawn model,
// periods T/2+1..T share another.  Requires T even.
//
// Smooth change: two endpoint models; period t (1-based) uses
// rho/sigma = a_t * first + (1 - a_t) * last with a_t = (T - t)/(T - 1),
// while each variable's parent jumps from the first model's to the last
// model's at its own switch time tau_i ~ U{2..T}.
ScenarioDataset generate_scenario(const ScenarioConfig& config);

// Copies a list of per-period blocks into a TemporalDataset (raw space).
TemporalDataset dataset_from_blocks(const std::vector<Eigen::MatrixXd>& blocks);

// Packages the scenario's exact covariances as a reference model so the
// ground truth can run through the same evaluation path as fitted models:
// correlation-space factors as weights, zero means, true sigmas as stds.
TCorexModel truth_model(const ScenarioDataset& scenario);

}  // namespace tempcov
