// Evaluation metrics: Gaussian NLL against dense linear-algebra oracles and
// closed forms, clustering + adjusted Rand index, and change-point scores.
#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <vector>

#include "tempcov/dataset.hpp"
#include "tempcov/dlr.hpp"
#include "tempcov/errors.hpp"
#include "tempcov/evaluate.hpp"
#include "tempcov/rng.hpp"
#include "tempcov/synthetic.hpp"
#include "tempcov/tcorex.hpp"

using namespace tempcov;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(rows, cols);
  rng.fill_normal(x);
  return x;
}

DiagLowRank random_correlation(Eigen::Index p, Eigen::Index m,
                               std::uint64_t seed) {
  DiagLowRank cov;
  cov.sign = 1;
  cov.u = 0.3 * random_matrix(m, p, seed);
  cov.d = Eigen::VectorXd::Ones(p) -
          0.5 * cov.u.colwise().squaredNorm().transpose();
  return cov;
}

// A valid model with hand-picked parts (no weights; metrics use covariances).
TCorexModel make_model(std::vector<DiagLowRank> covs, Eigen::MatrixXd means,
                       Eigen::MatrixXd stds) {
  TCorexModel model;
  model.covariances = std::move(covs);
  model.period_means = std::move(means);
  model.period_stds = std::move(stds);
  model.validate();
  return model;
}

TCorexModel identity_model(Eigen::Index T, Eigen::Index p) {
  std::vector<DiagLowRank> covs;
  for (Eigen::Index t = 0; t < T; ++t) {
    DiagLowRank cov;
    cov.sign = 1;
    cov.d = Eigen::VectorXd::Ones(p);
    cov.u = Eigen::MatrixXd::Zero(0, p);
    covs.push_back(std::move(cov));
  }
  return make_model(std::move(covs), Eigen::MatrixXd::Zero(T, p),
                    Eigen::MatrixXd::Ones(T, p));
}

// Dense-route NLL of one period, the straightforward way.
double dense_nll(const Eigen::MatrixXd& block, const Eigen::RowVectorXd& mean,
                 const Eigen::MatrixXd& sigma_raw) {
  const Eigen::Index p = block.cols();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_raw);
  REQUIRE(llt.info() == Eigen::Success);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < p; ++i)
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const Eigen::MatrixXd centered = block.rowwise() - mean;
  double quad = 0.0;
  for (Eigen::Index r = 0; r < block.rows(); ++r) {
    quad += centered.row(r) * llt.solve(centered.row(r).transpose());
  }
  quad /= static_cast<double>(block.rows());
  return 0.5 * (static_cast<double>(p) * std::log(2.0 * std::numbers::pi) +
                log_det + quad);
}

}  // namespace

TEST_SUITE("evaluate") {

TEST_CASE("NLL closed forms under the identity model") {
  const Eigen::Index p = 5;
  TCorexModel model = identity_model(1, p);

  SUBCASE("all-zero data leaves only the constant") {
    TemporalDataset test =
        TemporalDataset::from_blocks({Eigen::MatrixXd::Zero(3, p)});
    const auto nll = nll_per_period(model, test);
    REQUIRE(nll.size() == 1);
    CHECK(nll[0] ==
          doctest::Approx(0.5 * static_cast<double>(p) *
                          std::log(2.0 * std::numbers::pi))
              .epsilon(1e-15));
  }

  SUBCASE("a single row adds half its squared norm") {
    Eigen::MatrixXd row = random_matrix(1, p, 3);
    TemporalDataset test = TemporalDataset::from_blocks({row});
    const auto nll = nll_per_period(model, test);
    CHECK(nll[0] ==
          doctest::Approx(0.5 * (static_cast<double>(p) *
                                     std::log(2.0 * std::numbers::pi) +
                                 row.squaredNorm()))
              .epsilon(1e-14));
  }
}

TEST_CASE("NLL matches a dense Cholesky oracle, raw scale included") {
  const Eigen::Index T = 3, p = 64, n = 40;
  std::vector<DiagLowRank> covs;
  for (Eigen::Index t = 0; t < T; ++t)
    covs.push_back(random_correlation(p, 6, 100 + static_cast<std::uint64_t>(t)));
  Eigen::MatrixXd means = random_matrix(T, p, 7);
  Eigen::MatrixXd stds =
      (random_matrix(T, p, 8).array().abs() + 0.5).matrix();
  TCorexModel model = make_model(covs, means, stds);

  std::vector<Eigen::MatrixXd> blocks;
  for (Eigen::Index t = 0; t < T; ++t)
    blocks.push_back(2.0 * random_matrix(n, p, 200 + static_cast<std::uint64_t>(t)));
  TemporalDataset test = TemporalDataset::from_blocks(blocks);

  const auto nll = nll_per_period(model, test);
  REQUIRE(nll.size() == 3);
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::MatrixXd sigma_raw =
        stds.row(t).transpose().asDiagonal() *
        to_dense(covs[static_cast<std::size_t>(t)]) *
        stds.row(t).transpose().asDiagonal();
    const double expected =
        dense_nll(blocks[static_cast<std::size_t>(t)], means.row(t), sigma_raw);
    CHECK(nll[static_cast<std::size_t>(t)] ==
          doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("NLL of the generating model approaches the entropy") {
  ModularModel truth = sample_modular_model(32, 4, 21);
  Eigen::MatrixXd data = sample_data(truth, 100000, 22);

  TCorexModel model =
      make_model({model_correlation(truth)}, Eigen::MatrixXd::Zero(1, 32),
                 truth.sigma.transpose());
  TemporalDataset test = TemporalDataset::from_blocks({data});
  const double nll = nll_per_period(model, test)[0];

  const double ld = log_det(model.raw_covariance(0));
  const double expected =
      0.5 * (32.0 * std::log(2.0 * std::numbers::pi) + ld + 32.0);
  CHECK(nll == doctest::Approx(expected).epsilon(0.005));
}

TEST_CASE("truth NLL on the sudden benchmark lands in the published range") {
  ScenarioConfig config;
  config.kind = ScenarioKind::kSudden;
  config.seed = 0;  // defaults: p = 128, m = 8, s = 8, T = 10
  ScenarioDataset scenario = generate_scenario(config);
  TCorexModel truth = truth_model(scenario);
  EvalReport report =
      evaluate(truth, dataset_from_blocks(scenario.test), &scenario.labels);
  CHECK(report.mean_nll > 180.0);
  CHECK(report.mean_nll < 212.0);
  CHECK(report.mean_ari == 1.0);  // the truth clusters are the labels
  REQUIRE(report.period_nll.size() == 10);
  REQUIRE(report.period_ari.size() == 10);
}

TEST_CASE("nll_per_period validation") {
  TCorexModel model = identity_model(2, 4);
  TemporalDataset test = TemporalDataset::from_blocks(
      {random_matrix(3, 4, 31), random_matrix(3, 4, 32),
       random_matrix(3, 4, 33)});
  CHECK_THROWS_AS(nll_per_period(model, test), DimensionError);  // T mismatch
  TemporalDataset narrow = TemporalDataset::from_blocks(
      {random_matrix(3, 3, 31), random_matrix(3, 3, 32)});
  CHECK_THROWS_AS(nll_per_period(model, narrow), DimensionError);
}

TEST_CASE("cluster labels follow the dominant factor loading") {
  SUBCASE("hand-built loadings with a tie column") {
    DiagLowRank cov;
    cov.sign = 1;
    cov.u.resize(2, 3);
    cov.u << 0.5, 0.0, -0.2,
             0.3, 0.0, 0.4;
    cov.d = Eigen::VectorXd::Ones(3) -
            cov.u.colwise().squaredNorm().transpose();
    TCorexModel model = make_model({cov}, Eigen::MatrixXd::Zero(1, 3),
                                   Eigen::MatrixXd::Ones(1, 3));
    const auto labels = cluster_labels(model, 0);
    REQUIRE(labels.size() == 3);
    CHECK(labels[0] == 0);  // |0.5| > |0.3|
    CHECK(labels[1] == 0);  // all-zero column: tie toward factor 0
    CHECK(labels[2] == 1);  // |-0.2| < |0.4|
    CHECK_THROWS_AS(cluster_labels(model, 1), InvalidArgumentError);
  }

  SUBCASE("the truth model recovers the generating partition") {
    ScenarioConfig config;
    config.kind = ScenarioKind::kSmooth;
    config.p = 40;
    config.m = 5;
    config.s = 4;
    config.T = 6;
    config.seed = 13;
    config.val_samples = 2;
    config.test_samples = 4;
    ScenarioDataset scenario = generate_scenario(config);
    TCorexModel truth = truth_model(scenario);
    for (Eigen::Index t = 0; t < 6; ++t) {
      const auto labels = cluster_labels(truth, t);
      for (Eigen::Index i = 0; i < 40; ++i) {
        CHECK(labels[static_cast<std::size_t>(i)] == scenario.labels(t, i));
      }
    }
  }
}

TEST_CASE("adjusted Rand index reference values") {
  auto ari = [](std::vector<int> a, std::vector<int> b) {
    return adjusted_rand_index(a, b);
  };
  CHECK(ari({1, 1, 2, 2, 3}, {1, 1, 2, 2, 3}) == 1.0);
  CHECK(ari({1, 1, 2, 2, 3}, {7, 7, 5, 5, 0}) == 1.0);  // relabelled
  CHECK(ari({1, 1, 2, 2}, {1, 2, 1, 2}) == doctest::Approx(-0.5));
  CHECK(ari({0, 0, 0, 0}, {0, 0, 0, 0}) == 1.0);        // degenerate
  CHECK(ari({3, 3, 3, 3}, {1, 1, 1, 1}) == 1.0);
  CHECK(ari({0, 1, 2, 3}, {5, 5, 5, 5}) == doctest::Approx(0.0));
  // Hand-computed contingency example: index = 2, expected = 1.6, max = 4.
  CHECK(ari({1, 1, 1, 2, 2}, {1, 1, 2, 2, 2}) == doctest::Approx(1.0 / 6.0));

  CHECK_THROWS_AS(adjusted_rand_index(std::vector<int>{1, 2},
                                      std::vector<int>{1}),
                  DimensionError);
  CHECK_THROWS_AS(adjusted_rand_index(std::vector<int>{},
                                      std::vector<int>{}),
                  InvalidArgumentError);
}

TEST_CASE("change-point scores") {
  SUBCASE("identical periods score exactly zero") {
    std::vector<DiagLowRank> covs(4, random_correlation(10, 3, 41));
    TCorexModel model = make_model(std::move(covs), Eigen::MatrixXd::Zero(4, 10),
                                   Eigen::MatrixXd::Ones(4, 10));
    const auto scores = changepoint_scores(model);
    REQUIRE(scores.size() == 3);
    for (double s : scores) CHECK(s == 0.0);
  }

  SUBCASE("sudden truth spikes only at the boundary") {
    ScenarioConfig config;
    config.kind = ScenarioKind::kSudden;
    config.p = 32;
    config.m = 4;
    config.s = 4;
    config.T = 8;
    config.seed = 51;
    config.val_samples = 2;
    config.test_samples = 4;
    ScenarioDataset scenario = generate_scenario(config);
    TCorexModel truth = truth_model(scenario);
    const auto scores = changepoint_scores(truth);
    REQUIRE(scores.size() == 7);
    for (std::size_t t = 0; t < 7; ++t) {
      if (t == 3) {
        CHECK(scores[t] > 0.1);
      } else {
        CHECK(scores[t] == 0.0);
      }
    }
  }

  SUBCASE("scores equal the dense precision-difference norm") {
    std::vector<DiagLowRank> covs{random_correlation(24, 4, 61),
                                  random_correlation(24, 4, 62)};
    TCorexModel model = make_model(covs, Eigen::MatrixXd::Zero(2, 24),
                                   Eigen::MatrixXd::Ones(2, 24));
    const auto scores = changepoint_scores(model);
    const Eigen::MatrixXd theta0 = to_dense(covs[0]).inverse();
    const Eigen::MatrixXd theta1 = to_dense(covs[1]).inverse();
    CHECK(scores[0] ==
          doctest::Approx((theta1 - theta0).norm()).epsilon(1e-8));
  }

  SUBCASE("requires at least two periods") {
    TCorexModel model = identity_model(1, 4);
    CHECK_THROWS_AS(changepoint_scores(model), InvalidArgumentError);
  }
}

TEST_CASE("top changed variables") {
  SUBCASE("a single diagonal bump is pinpointed") {
    // m = 0 keeps the precision diagonal, so only variable 3 changes.
    DiagLowRank before;
    before.sign = 1;
    before.d = Eigen::VectorXd::Ones(6);
    before.u = Eigen::MatrixXd::Zero(0, 6);
    DiagLowRank after = before;
    after.d(3) = 2.0;
    TCorexModel model = make_model({before, after},
                                   Eigen::MatrixXd::Zero(2, 6),
                                   Eigen::MatrixXd::Ones(2, 6));
    const auto top = top_changed_variables(model, 0, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0] == 3);
    // The remaining scores are all zero: ties resolve by ascending index.
    CHECK(top[1] == 0);
    CHECK(top[2] == 1);
  }

  SUBCASE("ordering matches the dense per-row oracle") {
    std::vector<DiagLowRank> covs{random_correlation(16, 3, 71),
                                  random_correlation(16, 3, 72)};
    TCorexModel model = make_model(covs, Eigen::MatrixXd::Zero(2, 16),
                                   Eigen::MatrixXd::Ones(2, 16));
    const auto top = top_changed_variables(model, 0, 16);
    REQUIRE(top.size() == 16);

    const Eigen::MatrixXd diff = to_dense(covs[1]).inverse() -
                                 to_dense(covs[0]).inverse();
    Eigen::VectorXd change = diff.array().square().rowwise().sum();
    for (std::size_t k = 0; k + 1 < top.size(); ++k) {
      CHECK(change(top[k]) >=
            change(top[k + 1]) - 1e-10);  // non-increasing
    }
    // The top entry really is the max.
    Eigen::Index argmax;
    change.maxCoeff(&argmax);
    CHECK(top[0] == static_cast<int>(argmax));
  }

  SUBCASE("bounds") {
    TCorexModel model = identity_model(3, 4);
    CHECK(top_changed_variables(model, 1, 0).empty());
    CHECK_THROWS_AS(top_changed_variables(model, 2, 1), InvalidArgumentError);
    CHECK_THROWS_AS(top_changed_variables(model, 0, 5), InvalidArgumentError);
  }
}

TEST_CASE("evaluate assembles the full report") {
  ScenarioConfig config;
  config.kind = ScenarioKind::kSudden;
  config.p = 16;
  config.m = 2;
  config.s = 4;
  config.T = 4;
  config.seed = 81;
  config.val_samples = 2;
  config.test_samples = 8;
  ScenarioDataset scenario = generate_scenario(config);
  TCorexModel truth = truth_model(scenario);

  EvalReport report = evaluate(truth, dataset_from_blocks(scenario.test),
                               &scenario.labels, /*with_changepoints=*/true);
  REQUIRE(report.period_nll.size() == 4);
  REQUIRE(report.period_ari.size() == 4);
  REQUIRE(report.changepoint.size() == 3);
  double mean = 0.0;
  for (double v : report.period_nll) mean += v;
  CHECK(report.mean_nll == doctest::Approx(mean / 4.0).epsilon(1e-14));
  CHECK(report.mean_ari == 1.0);

  // Without labels or change-points the optional sections stay empty.
  EvalReport bare = evaluate(truth, dataset_from_blocks(scenario.test));
  CHECK(bare.period_ari.empty());
  CHECK(bare.changepoint.empty());
  CHECK(bare.mean_nll == report.mean_nll);

  // Labels of the wrong shape are rejected.
  Eigen::MatrixXi bad = scenario.labels.topRows(2);
  CHECK_THROWS_AS(
      evaluate(truth, dataset_from_blocks(scenario.test), &bad),
      DimensionError);

  // JSON form carries the sections that were computed.
  const std::string json = report.to_json_string();
  CHECK(json.find("\"mean_nll\"") != std::string::npos);
  CHECK(json.find("\"period_ari\"") != std::string::npos);
  CHECK(json.find("\"changepoint_scores\"") != std::string::npos);
  const std::string bare_json = bare.to_json_string();
  CHECK(bare_json.find("\"period_ari\"") == std::string::npos);
}

}  // TEST_SUITE
