#include "tempcov/model.hpp"

#include <cmath>
#include <string>

#include "tempcov/errors.hpp"

namespace tempcov {

std::string penalty_name(PenaltyKind phi) {
  return phi == PenaltyKind::kL1 ? "l1" : "l2";
}

PenaltyKind penalty_from_name(const std::string& name) {
  if (name == "l1") return PenaltyKind::kL1;
  if (name == "l2") return PenaltyKind::kL2;
  throw InvalidArgumentError("unknown penalty kind '" + name +
                             "' (expected l1 or l2)");
}

std::vector<double> FitConfig::default_anneal_schedule() {
  std::vector<double> schedule;
  double eps = 1.0;
  for (int k = 0; k < 6; ++k) {
    eps *= 0.6;
    schedule.push_back(eps);
  }
  schedule.push_back(0.0);
  return schedule;
}

void FitConfig::validate() const {
  if (m < 0) throw InvalidArgumentError("m must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgumentError("lambda must be finite and >= 0");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw InvalidArgumentError("beta must lie in (0, 1), got " +
                               std::to_string(beta));
  }
  if (anneal_schedule.empty() || anneal_schedule.back() != 0.0) {
    throw InvalidArgumentError("annealing schedule must end in 0");
  }
  for (double eps : anneal_schedule) {
    if (!(eps >= 0.0 && eps <= 1.0)) {
      throw InvalidArgumentError("annealing epsilon outside [0, 1]");
    }
  }
  if (steps_per_round < 1 || init_steps_per_round < 1) {
    throw InvalidArgumentError("step budgets must be >= 1");
  }
  if (!(adam_lr > 0.0) || !(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw InvalidArgumentError("invalid Adam constants");
  }
  if (!(weight_cutoff > 0.0)) {
    throw InvalidArgumentError("weight cutoff must be positive");
  }
  if (!(convergence_tol > 0.0) || convergence_window < 1) {
    throw InvalidArgumentError("invalid convergence parameters");
  }
}

DiagLowRank TCorexModel::raw_covariance(Eigen::Index t) const {
  if (t < 0 || t >= num_periods()) {
    throw InvalidArgumentError("period index out of range");
  }
  const auto& corr = covariances[static_cast<std::size_t>(t)];
  const Eigen::ArrayXd sigma = period_stds.row(t).transpose().array();
  DiagLowRank raw;
  raw.sign = corr.sign;
  raw.d = (corr.d.array() * sigma.square()).matrix();
  raw.u = (corr.u.array().rowwise() * sigma.transpose()).matrix();
  return raw;
}

void TCorexModel::validate() const {
  const Eigen::Index T = num_periods();
  if (T == 0) throw InvalidArgumentError("model has no periods");
  const Eigen::Index p = covariances.front().p();
  for (const auto& cov : covariances) {
    cov.validate();
    if (cov.p() != p) throw DimensionError("covariance widths differ");
  }
  if (!weights.empty()) {
    if (static_cast<Eigen::Index>(weights.size()) != T) {
      throw DimensionError("weight/covariance period counts differ");
    }
    for (const auto& w : weights) {
      if (w.cols() != p || w.rows() != weights.front().rows()) {
        throw DimensionError("weight matrix shapes differ across periods");
      }
      if (!w.allFinite()) throw NumericalError("non-finite model weights");
    }
  }
  if (period_means.rows() != T || period_means.cols() != p ||
      period_stds.rows() != T || period_stds.cols() != p) {
    throw DimensionError("standardization statistics shape mismatch");
  }
  if (!period_means.allFinite() || !period_stds.allFinite()) {
    throw NumericalError("non-finite standardization statistics");
  }
  if ((period_stds.array() <= 0.0).any()) {
    throw InvalidArgumentError("period standard deviations must be positive");
  }
}

}  // namespace tempcov
