#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "tempcov/dataset.hpp"
#include "tempcov/model.hpp"

namespace tempcov {

struct EvalReport {
  std::vector<double> period_nll;   // one entry per period
  double mean_nll = 0.0;
  std::vector<double> period_ari;   // empty when no ground-truth labels
  double mean_ari = 0.0;            // meaningful only when period_ari set
  std::vector<double> changepoint;  // empty unless requested; length T - 1

  std::string to_json_string() const;
};

// Per-sample Gaussian negative log-likelihood of raw-space test data under
// the model's de-standardized covariance, averaged within each period and
// then across periods (natural log, population convention).
std::vector<double> nll_per_period(const TCorexModel& model,
                                   const TemporalDataset& test);

// Cluster labels for period t: variable i joins the factor with the largest
// |R_{j,i}| in the model's final noise-free moments (equivalently the
// largest |u_{j,i}| of the stored covariance factor, since the two differ
// by strictly monotone column-wise maps).  Ties break toward the smallest
// factor index.  Labels are 0-based.
std::vector<int> cluster_labels(const TCorexModel& model, Eigen::Index t);

// Standard pair-counting adjusted Rand index.  Degenerate contingency
// (denominator zero, e.g. both partitions a single cluster) counts as 1.
double adjusted_rand_index(std::span<const int> labels,
                           std::span<const int> truth);

// score_t = Frobenius norm of Theta_{t+1} - Theta_t where Theta_t is the
// precision matrix of the standardized-space estimate; length T - 1.
std::vector<double> changepoint_scores(const TCorexModel& model);

// Indices (0-based) of the k variables whose precision rows change most
// across the boundary between periods t and t+1; descending by change,
// ties toward the smaller index.
std::vector<int> top_changed_variables(const TCorexModel& model,
                                       Eigen::Index t, int k);

// Full report.  truth_labels (T x p, 0-based) enables the ARI section;
// with_changepoints adds the score vector (requires T >= 2).
EvalReport evaluate(const TCorexModel& model, const TemporalDataset& test,
                    const Eigen::MatrixXi* truth_labels = nullptr,
                    bool with_changepoints = false);

}  // namespace tempcov
