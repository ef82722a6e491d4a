#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

namespace tempcov {

// Multivariate time series divided into T consecutive periods; block t holds
// the s_t x p samples observed during period t.  Periods are 0-based in code;
// user-facing output (CLI, files, messages) numbers them from 1.
struct TemporalDataset {
  std::vector<Eigen::MatrixXd> blocks;

  // Filled by standardize(): row t holds the weighted mean / std that mapped
  // raw period t onto the standardized scale.  Empty on raw datasets.
  Eigen::MatrixXd period_means;  // T x p
  Eigen::MatrixXd period_stds;   // T x p

  Eigen::Index num_periods() const {
    return static_cast<Eigen::Index>(blocks.size());
  }
  Eigen::Index num_variables() const {
    return blocks.empty() ? 0 : blocks.front().cols();
  }
  Eigen::Index total_samples() const;
  bool is_standardized() const { return period_means.size() > 0; }

  // Validates non-emptiness, consistent widths, at least one row per block,
  // and finite values.
  static TemporalDataset from_blocks(std::vector<Eigen::MatrixXd> blocks);

  // Same checks on an existing instance, without copying.
  void validate() const;
};

// Splits an n x p series into floor(n / window) consecutive blocks of exactly
// `window` rows; trailing remainder rows are dropped.  Requires n >= window.
TemporalDataset window_series(const Eigen::Ref<const Eigen::MatrixXd>& series,
                              Eigen::Index window);

// Temporal sample weights for target period t (0-based): period tau gets
// alpha = beta^|t - tau|, and periods with alpha < cutoff are omitted.
// Returned pairs (tau, alpha) are sorted by tau; the target period itself
// (alpha = 1) always survives.
std::vector<std::pair<int, double>> sample_weights(int t, int num_periods,
                                                   double beta,
                                                   double cutoff = 1e-9);

// Weighted per-period standardization: period t's mean and variance are
// computed over all periods' samples using sample_weights(t, T, beta), then
// period t's own block is shifted/scaled by them.  Weighted variance is the
// population form (weights normalized to sum 1).  Throws ZeroVarianceError
// naming the offending variable and period.
TemporalDataset standardize(const TemporalDataset& raw, double beta,
                            double cutoff = 1e-9);

}  // namespace tempcov
