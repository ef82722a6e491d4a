#include "tempcov/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>

#include "tempcov/dlr.hpp"
#include "tempcov/errors.hpp"

namespace tempcov {

namespace {

double mean_of(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double binom2(double n) { return 0.5 * n * (n - 1.0); }

}  // namespace

std::string EvalReport::to_json_string() const {
  nlohmann::json j;
  j["version"] = 1;
  j["period_nll"] = period_nll;
  j["mean_nll"] = mean_nll;
  if (!period_ari.empty()) {
    j["period_ari"] = period_ari;
    j["mean_ari"] = mean_ari;
  }
  if (!changepoint.empty()) {
    j["changepoint_scores"] = changepoint;
  }
  return j.dump(2);
}

std::vector<double> nll_per_period(const TCorexModel& model,
                                   const TemporalDataset& test) {
  test.validate();
  const Eigen::Index T = model.num_periods();
  const Eigen::Index p = model.num_variables();
  if (test.num_periods() != T) {
    throw DimensionError("test data has " +
                         std::to_string(test.num_periods()) +
                         " periods but the model has " + std::to_string(T));
  }
  if (test.num_variables() != p) {
    throw DimensionError("test data has " +
                         std::to_string(test.num_variables()) +
                         " variables but the model has " + std::to_string(p));
  }

  const double constant =
      static_cast<double>(p) * std::log(2.0 * std::numbers::pi);
  std::vector<double> nll(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    double logdet;
    DiagLowRank precision;
    try {
      const DiagLowRank raw = model.raw_covariance(t);
      logdet = log_det(raw);
      precision = invert(raw);
    } catch (const NotPositiveDefiniteError& e) {
      throw NotPositiveDefiniteError("covariance estimate of period " +
                                     std::to_string(t + 1) +
                                     " is not positive definite: " + e.what());
    }
    // precision = diag(d) - V^T V, so the quadratic form splits into a
    // diagonal part and a rank-m correction; never forms a p x p matrix.
    const Eigen::MatrixXd centered =
        test.blocks[static_cast<std::size_t>(t)].rowwise() -
        model.period_means.row(t);
    const Eigen::VectorXd diag_part =
        centered.array().square().matrix() * precision.d;
    const Eigen::VectorXd low_rank_part =
        (centered * precision.u.transpose()).rowwise().squaredNorm();
    const double quad = (diag_part - low_rank_part).mean();
    nll[static_cast<std::size_t>(t)] = 0.5 * (constant + logdet + quad);
  }
  return nll;
}

std::vector<int> cluster_labels(const TCorexModel& model, Eigen::Index t) {
  if (t < 0 || t >= model.num_periods()) {
    throw InvalidArgumentError("cluster_labels: period index out of range");
  }
  const Eigen::MatrixXd& u = model.covariances[static_cast<std::size_t>(t)].u;
  const Eigen::Index p = u.cols();
  std::vector<int> labels(static_cast<std::size_t>(p), 0);
  for (Eigen::Index i = 0; i < p; ++i) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
      const double a = std::abs(u(j, i));
      if (a > best_abs) {
        best_abs = a;
        best = j;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

double adjusted_rand_index(std::span<const int> labels,
                           std::span<const int> truth) {
  if (labels.size() != truth.size()) {
    throw DimensionError("ARI needs partitions of equal length");
  }
  if (labels.empty()) {
    throw InvalidArgumentError("ARI of empty partitions is undefined");
  }
  const auto remap = [](std::span<const int> xs) {
    std::vector<int> compact(xs.size());
    std::vector<int> seen;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto it = std::find(seen.begin(), seen.end(), xs[i]);
      if (it == seen.end()) {
        compact[i] = static_cast<int>(seen.size());
        seen.push_back(xs[i]);
      } else {
        compact[i] = static_cast<int>(it - seen.begin());
      }
    }
    return std::pair{compact, seen.size()};
  };
  const auto [a, ka] = remap(labels);
  const auto [b, kb] = remap(truth);

  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(ka), static_cast<Eigen::Index>(kb));
  for (std::size_t i = 0; i < a.size(); ++i) {
    table(a[i], b[i]) += 1.0;
  }

  double index = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      index += binom2(table(r, c));
    }
  }
  double sum_a = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    sum_a += binom2(table.row(r).sum());
  }
  double sum_b = 0.0;
  for (Eigen::Index c = 0; c < table.cols(); ++c) {
    sum_b += binom2(table.col(c).sum());
  }
  const double pairs = binom2(static_cast<double>(a.size()));
  const double expected = pairs > 0.0 ? sum_a * sum_b / pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

namespace {

std::vector<DiagLowRank> standardized_precisions(const TCorexModel& model) {
  const Eigen::Index T = model.num_periods();
  std::vector<DiagLowRank> theta;
  theta.reserve(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    try {
      theta.push_back(invert(model.covariances[static_cast<std::size_t>(t)]));
    } catch (const NotPositiveDefiniteError& e) {
      throw NotPositiveDefiniteError("covariance estimate of period " +
                                     std::to_string(t + 1) +
                                     " is not positive definite: " + e.what());
    }
  }
  return theta;
}

}  // namespace

std::vector<double> changepoint_scores(const TCorexModel& model) {
  const Eigen::Index T = model.num_periods();
  if (T < 2) {
    throw InvalidArgumentError("change-point scores need at least 2 periods");
  }
  const std::vector<DiagLowRank> theta = standardized_precisions(model);
  std::vector<double> scores(static_cast<std::size_t>(T - 1));
  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    scores[static_cast<std::size_t>(t)] = std::sqrt(frobenius_diff_sq(
        theta[static_cast<std::size_t>(t + 1)],
        theta[static_cast<std::size_t>(t)]));
  }
  return scores;
}

std::vector<int> top_changed_variables(const TCorexModel& model,
                                       Eigen::Index t, int k) {
  const Eigen::Index T = model.num_periods();
  const Eigen::Index p = model.num_variables();
  if (t < 0 || t + 1 >= T) {
    throw InvalidArgumentError("top_changed_variables: boundary index out of "
                               "range");
  }
  if (k < 0 || static_cast<Eigen::Index>(k) > p) {
    throw InvalidArgumentError("top_changed_variables: k must lie in [0, p]");
  }
  DiagLowRank lo, hi;
  try {
    lo = invert(model.covariances[static_cast<std::size_t>(t)]);
    hi = invert(model.covariances[static_cast<std::size_t>(t + 1)]);
  } catch (const NotPositiveDefiniteError& e) {
    throw NotPositiveDefiniteError(
        "covariance estimate near the requested boundary is not positive "
        "definite: " +
        std::string(e.what()));
  }
  const Eigen::VectorXd change = per_variable_change(hi, lo);
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    if (change[x] != change[y]) return change[x] > change[y];
    return x < y;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

EvalReport evaluate(const TCorexModel& model, const TemporalDataset& test,
                    const Eigen::MatrixXi* truth_labels,
                    bool with_changepoints) {
  EvalReport report;
  report.period_nll = nll_per_period(model, test);
  report.mean_nll = mean_of(report.period_nll);

  if (truth_labels != nullptr) {
    const Eigen::Index T = model.num_periods();
    const Eigen::Index p = model.num_variables();
    if (truth_labels->rows() != T || truth_labels->cols() != p) {
      throw DimensionError("truth labels must be T x p");
    }
    report.period_ari.reserve(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) {
      const std::vector<int> labels = cluster_labels(model, t);
      std::vector<int> truth(static_cast<std::size_t>(p));
      for (Eigen::Index i = 0; i < p; ++i) {
        truth[static_cast<std::size_t>(i)] = (*truth_labels)(t, i);
      }
      report.period_ari.push_back(adjusted_rand_index(labels, truth));
    }
    report.mean_ari = mean_of(report.period_ari);
  }

  if (with_changepoints) {
    report.changepoint = changepoint_scores(model);
  }
  return report;
}

}  // namespace tempcov
