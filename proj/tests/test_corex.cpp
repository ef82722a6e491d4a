// Linear CorEx building blocks: latent factors, weighted moments, the
// factor-model objective, and the implied covariance (all on one period).
// Oracles here are deliberately naive per-sample scalar loops.
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "tempcov/corex.hpp"
#include "tempcov/errors.hpp"
#include "tempcov/rng.hpp"

using namespace tempcov;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(rows, cols);
  rng.fill_normal(x);
  return x;
}

Eigen::MatrixXd standardize_columns(Eigen::MatrixXd x) {
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const double mean = x.col(i).mean();
    x.col(i).array() -= mean;
    x.col(i) /= std::sqrt(x.col(i).array().square().mean());
  }
  return x;
}

// Everything below recomputes the pipeline with plain scalar loops, from the
// realized latent matrix z (so it applies to every noise mode).
struct NaiveResult {
  Eigen::VectorXd xsq, ez2, r_vec;
  Eigen::MatrixXd exz, r_corr, b;
  double objective = 0.0;
};

NaiveResult naive_pipeline(const std::vector<Eigen::MatrixXd>& xs,
                           const std::vector<double>& alphas,
                           const Eigen::MatrixXd& z, bool analytic) {
  const Eigen::Index p = xs.front().cols();
  const Eigen::Index m = z.cols();
  double norm = 0.0;
  for (std::size_t b = 0; b < xs.size(); ++b)
    norm += alphas[b] * static_cast<double>(xs[b].rows());

  // Per-sample weights, flattened in block order.
  std::vector<double> c;
  for (std::size_t b = 0; b < xs.size(); ++b)
    for (Eigen::Index l = 0; l < xs[b].rows(); ++l)
      c.push_back(alphas[b] / norm);

  Eigen::MatrixXd x(z.rows(), p);
  Eigen::Index off = 0;
  for (const auto& xb : xs) {
    x.middleRows(off, xb.rows()) = xb;
    off += xb.rows();
  }

  NaiveResult out;
  out.xsq.setZero(p);
  out.ez2.setZero(m);
  out.exz.setZero(m, p);
  for (Eigen::Index l = 0; l < x.rows(); ++l) {
    for (Eigen::Index i = 0; i < p; ++i) out.xsq(i) += c[l] * x(l, i) * x(l, i);
    for (Eigen::Index j = 0; j < m; ++j) {
      out.ez2(j) += c[l] * z(l, j) * z(l, j);
      for (Eigen::Index i = 0; i < p; ++i)
        out.exz(j, i) += c[l] * x(l, i) * z(l, j);
    }
  }
  if (analytic) out.ez2.array() += 1.0;
  out.ez2 = out.ez2.cwiseMax(1e-12);

  out.r_corr.resize(m, p);
  out.b.resize(m, p);
  out.r_vec.setZero(p);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < p; ++i) {
      double r = out.exz(j, i) / std::sqrt(out.ez2(j));
      r = std::min(std::max(r, -(1.0 - 1e-6)), 1.0 - 1e-6);
      out.r_corr(j, i) = r;
      out.b(j, i) = r / (1.0 - r * r);
      out.r_vec(i) += r * out.b(j, i);
    }

  // Residual variances through the per-sample predictors nu.
  Eigen::VectorXd res = Eigen::VectorXd::Zero(p);
  for (Eigen::Index l = 0; l < x.rows(); ++l)
    for (Eigen::Index i = 0; i < p; ++i) {
      double nu = 0.0;
      for (Eigen::Index j = 0; j < m; ++j)
        nu += out.b(j, i) * z(l, j) / std::sqrt(out.ez2(j));
      nu /= 1.0 + out.r_vec(i);
      res(i) += c[l] * (x(l, i) - nu) * (x(l, i) - nu);
    }

  out.objective = 0.0;
  for (Eigen::Index i = 0; i < p; ++i)
    out.objective += 0.5 * std::log(std::max(res(i), 1e-12));
  for (Eigen::Index j = 0; j < m; ++j)
    out.objective += 0.5 * std::log(out.ez2(j));
  return out;
}

}  // namespace

TEST_SUITE("corex") {

TEST_CASE("latent_factors: z = x W^T plus mode-dependent noise") {
  const Eigen::MatrixXd x = random_matrix(40, 6, 1);
  const Eigen::MatrixXd w = random_matrix(3, 6, 2);
  std::vector<BlockRef> blocks{{x, 1.0}};

  SUBCASE("disabled and analytic modes are the exact product") {
    Eigen::MatrixXd z = latent_factors(w, blocks, NoiseMode::kDisabled, nullptr);
    CHECK((z - x * w.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::MatrixXd za = latent_factors(w, blocks, NoiseMode::kAnalytic, nullptr);
    CHECK(za == z);
  }

  SUBCASE("sampled mode adds unit-variance Gaussian noise") {
    Eigen::MatrixXd big = random_matrix(50000, 2, 3);
    Eigen::MatrixXd w1 = random_matrix(1, 2, 4);
    std::vector<BlockRef> bb{{big, 1.0}};
    Rng rng = Rng::stream(9, {1});
    Eigen::MatrixXd z = latent_factors(w1, bb, NoiseMode::kSampled, &rng);
    Eigen::VectorXd noise = z - big * w1.transpose();
    const double mean = noise.mean();
    const double var = (noise.array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
  }

  SUBCASE("sampled mode requires an rng") {
    CHECK_THROWS_AS(latent_factors(w, blocks, NoiseMode::kSampled, nullptr),
                    InvalidArgumentError);
  }

  SUBCASE("dimension and weight validation") {
    Eigen::MatrixXd bad_w = random_matrix(3, 5, 5);
    CHECK_THROWS_AS(latent_factors(bad_w, blocks, NoiseMode::kDisabled, nullptr),
                    DimensionError);
    Eigen::MatrixXd narrow = random_matrix(4, 5, 6);
    std::vector<BlockRef> mixed{{x, 1.0}, {narrow, 1.0}};
    CHECK_THROWS_AS(latent_factors(w, mixed, NoiseMode::kDisabled, nullptr),
                    DimensionError);
    std::vector<BlockRef> negative{{x, -0.5}};
    CHECK_THROWS_AS(latent_factors(w, negative, NoiseMode::kDisabled, nullptr),
                    InvalidArgumentError);
    CHECK_THROWS_AS(
        latent_factors(w, std::vector<BlockRef>{}, NoiseMode::kDisabled,
                       nullptr),
        InvalidArgumentError);
  }
}

TEST_CASE("compute_moments matches the scalar-loop oracle") {
  std::vector<Eigen::MatrixXd> xs{random_matrix(30, 5, 11),
                                  random_matrix(20, 5, 12)};
  std::vector<double> alphas{1.0, 0.7};
  std::vector<BlockRef> blocks{{xs[0], alphas[0]}, {xs[1], alphas[1]}};
  const Eigen::MatrixXd w = random_matrix(3, 5, 13);

  for (bool analytic : {false, true}) {
    const NoiseMode mode = analytic ? NoiseMode::kAnalytic : NoiseMode::kDisabled;
    CAPTURE(analytic);
    MomentStats stats = compute_moments(w, blocks, mode, nullptr);
    NaiveResult naive = naive_pipeline(xs, alphas, stats.z, analytic);

    CHECK((stats.xsq - naive.xsq).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((stats.ez2 - naive.ez2).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((stats.exz - naive.exz).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((stats.r_corr - naive.r_corr).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((stats.b - naive.b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((stats.r_vec - naive.r_vec).cwiseAbs().maxCoeff() < 1e-12);
    // Normalized weights sum to one.
    CHECK(stats.c.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("compute_moments: sampled statistics from the realized z") {
  // The oracle consumes the same z, so sampled mode is checked exactly too.
  std::vector<Eigen::MatrixXd> xs{random_matrix(25, 4, 21),
                                  random_matrix(35, 4, 22)};
  std::vector<double> alphas{0.9, 0.4};
  std::vector<BlockRef> blocks{{xs[0], alphas[0]}, {xs[1], alphas[1]}};
  const Eigen::MatrixXd w = random_matrix(2, 4, 23);
  Rng rng = Rng::stream(77, {2});
  MomentStats stats = compute_moments(w, blocks, NoiseMode::kSampled, &rng);
  NaiveResult naive = naive_pipeline(xs, alphas, stats.z, false);
  CHECK((stats.ez2 - naive.ez2).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((stats.exz - naive.exz).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((stats.b - naive.b).cwiseAbs().maxCoeff() < 1e-12);
  const double obj = corex_objective(stats, blocks);
  CHECK(obj == doctest::Approx(naive.objective).epsilon(1e-10));
}

TEST_CASE("analytic mode adds exactly one to the latent second moments") {
  const Eigen::MatrixXd x = random_matrix(60, 4, 31);
  std::vector<BlockRef> blocks{{x, 1.0}};
  const Eigen::MatrixXd w = random_matrix(2, 4, 32);
  MomentStats off = compute_moments(w, blocks, NoiseMode::kDisabled, nullptr);
  MomentStats corr = compute_moments(w, blocks, NoiseMode::kAnalytic, nullptr);
  CHECK(corr.z == off.z);
  CHECK(corr.exz == off.exz);
  CHECK((corr.ez2 - (off.ez2.array() + 1.0).matrix()).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("noise-free latent variance is the plain weighted mean of squares") {
  const Eigen::MatrixXd x = random_matrix(80, 6, 41);
  std::vector<BlockRef> blocks{{x, 1.0}};
  const Eigen::MatrixXd w = random_matrix(3, 6, 42);
  MomentStats stats = compute_moments(w, blocks, NoiseMode::kDisabled, nullptr);
  Eigen::MatrixXd z = x * w.transpose();
  for (Eigen::Index j = 0; j < 3; ++j)
    CHECK(stats.ez2(j) ==
          doctest::Approx(z.col(j).array().square().mean()).epsilon(1e-13));
}

TEST_CASE("a zero-weight block changes nothing") {
  const Eigen::MatrixXd a = random_matrix(30, 4, 51);
  const Eigen::MatrixXd b = random_matrix(25, 4, 52);
  const Eigen::MatrixXd w = random_matrix(2, 4, 53);
  std::vector<BlockRef> both{{a, 1.0}, {b, 0.0}};
  std::vector<BlockRef> solo{{a, 1.0}};

  for (NoiseMode mode : {NoiseMode::kDisabled, NoiseMode::kAnalytic}) {
    MomentStats two = compute_moments(w, both, mode, nullptr);
    MomentStats one = compute_moments(w, solo, mode, nullptr);
    CHECK(two.ez2 == one.ez2);
    CHECK(two.exz == one.exz);
    CHECK(two.xsq == one.xsq);
    CHECK(two.b == one.b);
    CHECK(corex_objective(two, both) == corex_objective(one, solo));
  }

  // Sampled: the dropped block consumes its own noise draws, so the shared
  // prefix of the stream (and hence the kept block's z rows) is unchanged.
  Rng r1 = Rng::stream(5, {3});
  Rng r2 = Rng::stream(5, {3});
  MomentStats two = compute_moments(w, both, NoiseMode::kSampled, &r1);
  MomentStats one = compute_moments(w, solo, NoiseMode::kSampled, &r2);
  CHECK(two.z.topRows(30) == one.z);
  CHECK(two.ez2 == one.ez2);
  CHECK(corex_objective(two, both) == corex_objective(one, solo));
}

TEST_CASE("zero weights on standardized data give a near-zero objective") {
  Eigen::MatrixXd x = standardize_columns(random_matrix(20000, 6, 61));
  std::vector<BlockRef> blocks{{x, 1.0}};
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 6);
  Rng rng = Rng::stream(62, {4});
  MomentStats stats = compute_moments(w, blocks, NoiseMode::kSampled, &rng);
  // z is pure unit noise: E[z^2] ~ 1, correlations ~ 0, residuals ~ E[x^2] = 1.
  CHECK(std::abs(corex_objective(stats, blocks)) < 0.1);
}

TEST_CASE("scalar case: one variable, one factor, by hand") {
  Eigen::MatrixXd x(4, 1);
  x << 0.5, -0.3, 0.2, 0.1;
  Eigen::MatrixXd w(1, 1);
  w << 0.8;
  std::vector<BlockRef> blocks{{x, 1.0}};

  // Analytic mode: ez2 picks up the + 1 noise variance, so the factor does
  // not explain the variable exactly and the residual stays healthy.
  MomentStats stats = compute_moments(w, blocks, NoiseMode::kAnalytic, nullptr);
  const double q = x.array().square().mean();      // E[x^2]
  const double ez2 = 0.64 * q + 1.0;               // w^2 E[x^2] + noise
  const double r = 0.8 * q / std::sqrt(ez2);       // E[xz] / sqrt(E[z^2])
  const double b = r / (1.0 - r * r);
  CHECK(stats.ez2(0) == doctest::Approx(ez2).epsilon(1e-14));
  CHECK(stats.r_corr(0, 0) == doctest::Approx(r).epsilon(1e-14));
  CHECK(stats.b(0, 0) == doctest::Approx(b).epsilon(1e-14));

  // Residual by hand: nu_l = b * z_l / sqrt(ez2) / (1 + r b), noise-free z.
  double res = 0.0;
  for (int l = 0; l < 4; ++l) {
    const double z = 0.8 * x(l, 0);
    const double nu = b * z / std::sqrt(ez2) / (1.0 + r * b);
    res += 0.25 * (x(l, 0) - nu) * (x(l, 0) - nu);
  }
  const double expected = 0.5 * std::log(res) + 0.5 * std::log(ez2);
  CHECK(corex_objective(stats, blocks) ==
        doctest::Approx(expected).epsilon(1e-12));

  // With noise disabled the same factor explains x exactly (nu_l reduces to
  // x_l algebraically), so the residual hits the 1e-12 floor and the
  // objective is determined by the floor alone.
  MomentStats exact = compute_moments(w, blocks, NoiseMode::kDisabled, nullptr);
  const double floored =
      0.5 * std::log(1e-12) + 0.5 * std::log(0.64 * q);
  CHECK(corex_objective(exact, blocks) ==
        doctest::Approx(floored).epsilon(1e-12));
}

TEST_CASE("objective matches the naive oracle on random problems") {
  for (std::uint64_t trial = 0; trial < 6; ++trial) {
    CAPTURE(trial);
    Rng meta(900 + trial);
    const auto p = static_cast<Eigen::Index>(meta.uniform_int(1, 12));
    const auto m = static_cast<Eigen::Index>(meta.uniform_int(1, 6));
    std::vector<Eigen::MatrixXd> xs{random_matrix(20, p, 1000 + trial),
                                    random_matrix(15, p, 2000 + trial)};
    std::vector<double> alphas{1.0, 0.3};
    std::vector<BlockRef> blocks{{xs[0], alphas[0]}, {xs[1], alphas[1]}};
    Eigen::MatrixXd w = 0.5 * random_matrix(m, p, 3000 + trial);

    MomentStats stats = compute_moments(w, blocks, NoiseMode::kDisabled, nullptr);
    NaiveResult naive = naive_pipeline(xs, alphas, stats.z, false);
    CHECK(corex_objective(stats, blocks) ==
          doctest::Approx(naive.objective).epsilon(1e-10));
  }
}

TEST_CASE("perfectly explained variable hits the correlation clamp") {
  // With w selecting variable 0 exactly and no noise, R_00 would be 1.
  Eigen::MatrixXd x = standardize_columns(random_matrix(50, 3, 71));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 3);
  w(0, 0) = 1.0;
  std::vector<BlockRef> blocks{{x, 1.0}};
  MomentStats stats = compute_moments(w, blocks, NoiseMode::kDisabled, nullptr);
  CHECK(stats.r_true(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stats.r_corr(0, 0) == 1.0 - 1e-6);
  CHECK(std::isfinite(stats.b(0, 0)));
  CHECK(stats.r_corr.cwiseAbs().maxCoeff() <= 1.0 - 1e-6);
}

TEST_CASE("covariance_estimate: closed forms") {
  SUBCASE("zero factors give the identity") {
    MomentStats stats;
    stats.b = Eigen::MatrixXd::Zero(2, 3);
    stats.r_vec = Eigen::VectorXd::Zero(3);
    DiagLowRank cov = covariance_estimate(stats);
    CHECK((to_dense(cov) - Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  SUBCASE("one factor, two variables with correlation rho") {
    const double rho = 0.6;
    MomentStats stats;
    stats.b.resize(1, 2);
    stats.b.setConstant(rho / (1.0 - rho * rho));
    stats.r_vec.resize(2);
    stats.r_vec.setConstant(rho * rho / (1.0 - rho * rho));
    DiagLowRank cov = covariance_estimate(stats);
    // u_i collapses back to rho, so off-diagonals are rho^2 and diagonal 1.
    CHECK(cov.u(0, 0) == doctest::Approx(rho).epsilon(1e-14));
    Eigen::MatrixXd dense = to_dense(cov);
    CHECK(dense(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(dense(0, 1) == doctest::Approx(rho * rho).epsilon(1e-14));
  }
}

TEST_CASE("covariance_estimate matches the entrywise construction") {
  Eigen::MatrixXd x = standardize_columns(random_matrix(400, 32, 81));
  Eigen::MatrixXd w = 0.3 * random_matrix(4, 32, 82);
  std::vector<BlockRef> blocks{{x, 1.0}};
  MomentStats stats = compute_moments(w, blocks, NoiseMode::kAnalytic, nullptr);
  DiagLowRank cov = covariance_estimate(stats);
  Eigen::MatrixXd dense = to_dense(cov);

  // Entry by entry from B and r, the published recovery formula.
  for (Eigen::Index i = 0; i < 32; ++i) {
    for (Eigen::Index k = 0; k < 32; ++k) {
      if (i == k) {
        CHECK(dense(i, i) == doctest::Approx(1.0).epsilon(1e-12));
        continue;
      }
      double sum = 0.0;
      for (Eigen::Index j = 0; j < 4; ++j)
        sum += stats.b(j, i) / (1.0 + stats.r_vec(i)) * stats.b(j, k) /
               (1.0 + stats.r_vec(k));
      CHECK(dense(i, k) == doctest::Approx(sum).epsilon(1e-12));
    }
  }
  CHECK(cov.sign == 1);
  CHECK(cov.d.minCoeff() >= kCovarianceDiagFloor);
}

TEST_CASE("fused period evaluation agrees with the compositional route") {
  std::vector<Eigen::MatrixXd> xs{random_matrix(30, 7, 91),
                                  random_matrix(22, 7, 92),
                                  random_matrix(18, 7, 93)};
  std::vector<double> alphas{0.25, 1.0, 0.5};
  std::vector<BlockRef> blocks{
      {xs[0], alphas[0]}, {xs[1], alphas[1]}, {xs[2], alphas[2]}};
  Eigen::MatrixXd w = 0.4 * random_matrix(3, 7, 94);
  OwnedRows rows = concat_blocks(blocks);

  SUBCASE("deterministic modes") {
    for (NoiseMode mode : {NoiseMode::kDisabled, NoiseMode::kAnalytic}) {
      MomentStats stats = compute_moments(w, blocks, mode, nullptr);
      const double expected = corex_objective(stats, blocks);
      PeriodEval eval =
          period_objective_gradient(w, rows.view(), mode, nullptr, false);
      CHECK(eval.objective == doctest::Approx(expected).epsilon(1e-9));
      CHECK(eval.grad.size() == 0);
    }
  }

  SUBCASE("sampled mode with a shared stream") {
    Rng r1 = Rng::stream(17, {5});
    Rng r2 = Rng::stream(17, {5});
    MomentStats stats = compute_moments(w, blocks, NoiseMode::kSampled, &r1);
    const double expected = corex_objective(stats, blocks);
    PeriodEval eval = period_objective_gradient(w, rows.view(),
                                                NoiseMode::kSampled, &r2, true);
    CHECK(eval.objective == doctest::Approx(expected).epsilon(1e-9));
    CHECK(eval.grad.rows() == 3);
    CHECK(eval.grad.cols() == 7);
    CHECK(eval.grad.allFinite());
  }

  SUBCASE("zero factors reduce to the data term") {
    Eigen::MatrixXd w0(0, 7);
    MomentStats stats = compute_moments(w0, blocks, NoiseMode::kDisabled, nullptr);
    const double expected = corex_objective(stats, blocks);
    PeriodEval eval = period_objective_gradient(w0, rows.view(),
                                                NoiseMode::kDisabled, nullptr,
                                                true);
    CHECK(eval.objective == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("concat_blocks preserves rows, weights, and segment boundaries") {
  const Eigen::MatrixXd a = random_matrix(4, 3, 95);
  const Eigen::MatrixXd b = random_matrix(6, 3, 96);
  std::vector<BlockRef> blocks{{a, 1.0}, {b, 0.5}};
  OwnedRows rows = concat_blocks(blocks);
  REQUIRE(rows.x.rows() == 10);
  CHECK(rows.x.topRows(4) == a);
  CHECK(rows.x.bottomRows(6) == b);
  const double norm = 1.0 * 4 + 0.5 * 6;
  CHECK(rows.c.head(4).isApproxToConstant(1.0 / norm));
  CHECK(rows.c.tail(6).isApproxToConstant(0.5 / norm));
  CHECK(rows.c.sum() == doctest::Approx(1.0).epsilon(1e-14));
  REQUIRE(rows.segment_ends.size() == 2);
  CHECK(rows.segment_ends[0] == 4);
  CHECK(rows.segment_ends[1] == 10);
}

}  // TEST_SUITE
