#include "tempcov/dataset.hpp"

#include <cmath>
#include <string>

#include "tempcov/errors.hpp"

namespace tempcov {

Eigen::Index TemporalDataset::total_samples() const {
  Eigen::Index n = 0;
  for (const auto& block : blocks) n += block.rows();
  return n;
}

void TemporalDataset::validate() const {
  if (blocks.empty()) {
    throw InvalidArgumentError("dataset needs at least one period");
  }
  const Eigen::Index p = blocks.front().cols();
  if (p == 0) throw InvalidArgumentError("dataset has zero variables");
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    if (blocks[t].cols() != p) {
      throw DimensionError("period " + std::to_string(t + 1) + " has " +
                           std::to_string(blocks[t].cols()) +
                           " variables, expected " + std::to_string(p));
    }
    if (blocks[t].rows() == 0) {
      throw InvalidArgumentError("period " + std::to_string(t + 1) +
                                 " has no samples");
    }
    if (!blocks[t].allFinite()) {
      throw InvalidArgumentError("period " + std::to_string(t + 1) +
                                 " contains non-finite values");
    }
  }
}

TemporalDataset TemporalDataset::from_blocks(
    std::vector<Eigen::MatrixXd> blocks) {
  TemporalDataset ds;
  ds.blocks = std::move(blocks);
  ds.validate();
  return ds;
}

TemporalDataset window_series(const Eigen::Ref<const Eigen::MatrixXd>& series,
                              Eigen::Index window) {
  if (window <= 0) {
    throw InvalidArgumentError("window size must be positive, got " +
                               std::to_string(window));
  }
  if (series.rows() < window) {
    throw InvalidArgumentError("window size " + std::to_string(window) +
                               " exceeds series length " +
                               std::to_string(series.rows()));
  }
  const Eigen::Index periods = series.rows() / window;
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(static_cast<std::size_t>(periods));
  for (Eigen::Index t = 0; t < periods; ++t) {
    blocks.emplace_back(series.middleRows(t * window, window));
  }
  return TemporalDataset::from_blocks(std::move(blocks));
}

std::vector<std::pair<int, double>> sample_weights(int t, int num_periods,
                                                   double beta,
                                                   double cutoff) {
  if (num_periods <= 0) {
    throw InvalidArgumentError("number of periods must be positive");
  }
  if (t < 0 || t >= num_periods) {
    throw InvalidArgumentError("target period " + std::to_string(t) +
                               " outside [0, " + std::to_string(num_periods) +
                               ")");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw InvalidArgumentError("beta must lie in (0, 1), got " +
                               std::to_string(beta));
  }
  std::vector<std::pair<int, double>> weights;
  weights.reserve(static_cast<std::size_t>(num_periods));
  for (int tau = 0; tau < num_periods; ++tau) {
    const double alpha = std::pow(beta, std::abs(t - tau));
    if (alpha < cutoff) continue;  // strictly below the cutoff is dropped
    weights.emplace_back(tau, alpha);
  }
  return weights;
}

TemporalDataset standardize(const TemporalDataset& raw, double beta,
                            double cutoff) {
  if (raw.blocks.empty()) {
    throw InvalidArgumentError("cannot standardize an empty dataset");
  }
  const Eigen::Index T = raw.num_periods();
  const Eigen::Index p = raw.num_variables();

  TemporalDataset out;
  out.blocks.resize(static_cast<std::size_t>(T));
  out.period_means.resize(T, p);
  out.period_stds.resize(T, p);

  for (Eigen::Index t = 0; t < T; ++t) {
    const auto weights =
        sample_weights(static_cast<int>(t), static_cast<int>(T), beta, cutoff);

    double total_weight = 0.0;
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(p);
    for (const auto& [tau, alpha] : weights) {
      const auto& block = raw.blocks[static_cast<std::size_t>(tau)];
      mean += alpha * block.colwise().sum();
      total_weight += alpha * static_cast<double>(block.rows());
    }
    mean /= total_weight;

    Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(p);
    for (const auto& [tau, alpha] : weights) {
      const auto& block = raw.blocks[static_cast<std::size_t>(tau)];
      var += alpha *
             (block.rowwise() - mean).array().square().colwise().sum().matrix();
    }
    var /= total_weight;

    for (Eigen::Index i = 0; i < p; ++i) {
      if (!(var[i] > 0.0)) {
        throw ZeroVarianceError(
            "variable x" + std::to_string(i + 1) +
            " has zero weighted variance at period " + std::to_string(t + 1));
      }
    }

    const Eigen::RowVectorXd std = var.cwiseSqrt();
    out.period_means.row(t) = mean;
    out.period_stds.row(t) = std;
    const auto& block = raw.blocks[static_cast<std::size_t>(t)];
    out.blocks[static_cast<std::size_t>(t)] =
        (block.rowwise() - mean).array().rowwise() / std.array();
  }
  return out;
}

}  // namespace tempcov
