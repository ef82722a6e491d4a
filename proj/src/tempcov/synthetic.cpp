#include "tempcov/synthetic.hpp"

#include <cmath>
#include <cstddef>

#include "tempcov/errors.hpp"
#include "tempcov/rng.hpp"

namespace tempcov {

void ModularModel::validate() const {
  if (m < 1) throw InvalidArgumentError("modular model needs m >= 1");
  const Eigen::Index pp = p();
  if (pp < 1) throw InvalidArgumentError("modular model needs p >= 1");
  if (rho.size() != pp || sigma.size() != pp) {
    throw DimensionError("modular model field lengths disagree");
  }
  for (Eigen::Index i = 0; i < pp; ++i) {
    if (pi[static_cast<std::size_t>(i)] < 0 ||
        pi[static_cast<std::size_t>(i)] >= m) {
      throw InvalidArgumentError("parent index out of range at variable " +
                                 std::to_string(i + 1));
    }
    if (!(std::abs(rho[i]) < 1.0)) {
      throw InvalidArgumentError("|rho| must be < 1 at variable " +
                                 std::to_string(i + 1));
    }
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) {
      throw InvalidArgumentError("sigma must be positive at variable " +
                                 std::to_string(i + 1));
    }
  }
}

ModularModel sample_modular_model(int p, int m, std::uint64_t seed) {
  if (p < 1 || m < 1) {
    throw InvalidArgumentError("sample_modular_model needs p, m >= 1");
  }
  Rng rng(seed);
  ModularModel model;
  model.m = m;
  model.pi.resize(static_cast<std::size_t>(p));
  model.rho.resize(p);
  model.sigma.resize(p);
  for (int i = 0; i < p; ++i) {
    model.pi[static_cast<std::size_t>(i)] =
        static_cast<int>(rng.uniform_int(0, m - 1));
  }
  for (int i = 0; i < p; ++i) {
    model.sigma[i] = 0.25 + 3.75 * rng.uniform();
  }
  Eigen::VectorXd snr(p);
  for (int i = 0; i < p; ++i) snr[i] = 5.0 * rng.uniform();
  for (int i = 0; i < p; ++i) {
    const double xi = rng.normal();
    const double mag = std::sqrt(snr[i] / (snr[i] + 1.0));
    model.rho[i] = (xi < 0.0 ? -mag : mag);
  }
  model.validate();
  return model;
}

DiagLowRank model_covariance(const ModularModel& model) {
  model.validate();
  const Eigen::Index p = model.p();
  DiagLowRank cov;
  cov.sign = 1;
  cov.d.resize(p);
  cov.u = Eigen::MatrixXd::Zero(model.m, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    cov.u(model.pi[static_cast<std::size_t>(i)], i) =
        model.sigma[i] * model.rho[i];
    cov.d[i] = model.sigma[i] * model.sigma[i] *
               (1.0 - model.rho[i] * model.rho[i]);
  }
  cov.validate();
  return cov;
}

DiagLowRank model_correlation(const ModularModel& model) {
  model.validate();
  const Eigen::Index p = model.p();
  DiagLowRank cov;
  cov.sign = 1;
  cov.d.resize(p);
  cov.u = Eigen::MatrixXd::Zero(model.m, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    cov.u(model.pi[static_cast<std::size_t>(i)], i) = model.rho[i];
    cov.d[i] = 1.0 - model.rho[i] * model.rho[i];
  }
  cov.validate();
  return cov;
}

Eigen::MatrixXd sample_data(const ModularModel& model, Eigen::Index n,
                            std::uint64_t seed) {
  model.validate();
  if (n < 1) throw InvalidArgumentError("sample_data needs n >= 1");
  const Eigen::Index p = model.p();
  Rng rng(seed);
  Eigen::MatrixXd z(n, model.m);
  rng.fill_normal(z);
  Eigen::MatrixXd x(n, p);
  rng.fill_normal(x);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double noise = std::sqrt(1.0 - model.rho[i] * model.rho[i]);
    x.col(i) = model.sigma[i] *
               (model.rho[i] * z.col(model.pi[static_cast<std::size_t>(i)]) +
                noise * x.col(i));
  }
  return x;
}

std::string scenario_kind_name(ScenarioKind kind) {
  return kind == ScenarioKind::kSudden ? "sudden" : "smooth";
}

ScenarioKind scenario_kind_from_name(const std::string& name) {
  if (name == "sudden") return ScenarioKind::kSudden;
  if (name == "smooth") return ScenarioKind::kSmooth;
  throw InvalidArgumentError("unknown scenario kind '" + name +
                             "' (expected sudden or smooth)");
}

void ScenarioConfig::validate() const {
  if (p < 1 || m < 1) throw InvalidArgumentError("scenario needs p, m >= 1");
  if (s < 1) throw InvalidArgumentError("scenario needs s >= 1");
  if (val_samples < 1 || test_samples < 1) {
    throw InvalidArgumentError("scenario split sizes must be >= 1");
  }
  if (T < 2) throw InvalidArgumentError("scenario needs T >= 2");
  if (kind == ScenarioKind::kSudden && T % 2 != 0) {
    throw InvalidArgumentError("sudden-change scenario needs even T");
  }
}

void ScenarioDataset::validate() const {
  config.validate();
  const Eigen::Index T = config.T;
  const Eigen::Index p = config.p;
  if (num_periods() != T || static_cast<Eigen::Index>(val.size()) != T ||
      static_cast<Eigen::Index>(test.size()) != T ||
      static_cast<Eigen::Index>(truth.size()) != T) {
    throw DimensionError("scenario period lists have inconsistent lengths");
  }
  if (labels.rows() != T || labels.cols() != p) {
    throw DimensionError("scenario labels must be T x p");
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    const std::size_t ti = static_cast<std::size_t>(t);
    if (train[ti].rows() != config.s || train[ti].cols() != p ||
        val[ti].rows() != config.val_samples || val[ti].cols() != p ||
        test[ti].rows() != config.test_samples || test[ti].cols() != p) {
      throw DimensionError("scenario block shapes are wrong at period " +
                           std::to_string(t + 1));
    }
    truth[ti].validate();
    if (truth[ti].p() != p) {
      throw DimensionError("scenario truth covariance has wrong size");
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      if (labels(t, i) < 0 || labels(t, i) >= config.m) {
        throw InvalidArgumentError("scenario label out of range");
      }
    }
  }
}

namespace {

enum SplitIndex : std::uint64_t { kTrainSplit = 0, kValSplit = 1, kTestSplit = 2 };

ScenarioDataset assemble(const ScenarioConfig& config,
                         const std::vector<ModularModel>& models) {
  ScenarioDataset out;
  out.config = config;
  const Eigen::Index T = config.T;
  out.labels.resize(T, config.p);
  out.train.reserve(static_cast<std::size_t>(T));
  out.val.reserve(static_cast<std::size_t>(T));
  out.test.reserve(static_cast<std::size_t>(T));
  out.truth.reserve(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    const ModularModel& model = models[static_cast<std::size_t>(t)];
    out.truth.push_back(model_covariance(model));
    for (Eigen::Index i = 0; i < model.p(); ++i) {
      out.labels(t, i) = model.pi[static_cast<std::size_t>(i)];
    }
    const auto ut = static_cast<std::uint64_t>(t);
    out.train.push_back(sample_data(
        model, config.s,
        Rng::derive_key(config.seed, {tag(StreamTag::kSamples), ut,
                                      kTrainSplit})));
    out.val.push_back(sample_data(
        model, config.val_samples,
        Rng::derive_key(config.seed, {tag(StreamTag::kSamples), ut,
                                      kValSplit})));
    out.test.push_back(sample_data(
        model, config.test_samples,
        Rng::derive_key(config.seed, {tag(StreamTag::kSamples), ut,
                                      kTestSplit})));
  }
  out.validate();
  return out;
}

}  // namespace

ScenarioDataset generate_scenario(const ScenarioConfig& config) {
  config.validate();
  const ModularModel first = sample_modular_model(
      config.p, config.m,
      Rng::derive_key(config.seed, {tag(StreamTag::kModelFirst)}));
  const ModularModel last = sample_modular_model(
      config.p, config.m,
      Rng::derive_key(config.seed, {tag(StreamTag::kModelSecond)}));

  std::vector<ModularModel> models;
  models.reserve(static_cast<std::size_t>(config.T));

  if (config.kind == ScenarioKind::kSudden) {
    for (int t = 0; t < config.T; ++t) {
      models.push_back(t < config.T / 2 ? first : last);
    }
    return assemble(config, models);
  }

  // Smooth change: per-variable parent switch times tau_i ~ U{2..T}.
  Rng switches = Rng::stream(config.seed, {tag(StreamTag::kSwitchTimes)});
  std::vector<int> tau(static_cast<std::size_t>(config.p));
  for (int i = 0; i < config.p; ++i) {
    tau[static_cast<std::size_t>(i)] =
        static_cast<int>(switches.uniform_int(2, config.T));
  }
  for (int t1 = 1; t1 <= config.T; ++t1) {
    const double a = static_cast<double>(config.T - t1) /
                     static_cast<double>(config.T - 1);
    ModularModel model;
    model.m = config.m;
    model.pi.resize(static_cast<std::size_t>(config.p));
    model.rho = a * first.rho + (1.0 - a) * last.rho;
    model.sigma = a * first.sigma + (1.0 - a) * last.sigma;
    for (int i = 0; i < config.p; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      model.pi[ii] = (t1 < tau[ii]) ? first.pi[ii] : last.pi[ii];
    }
    models.push_back(std::move(model));
  }
  return assemble(config, models);
}

TemporalDataset dataset_from_blocks(
    const std::vector<Eigen::MatrixXd>& blocks) {
  return TemporalDataset::from_blocks(blocks);
}

TCorexModel truth_model(const ScenarioDataset& scenario) {
  scenario.validate();
  const Eigen::Index T = scenario.num_periods();
  const Eigen::Index p = scenario.num_variables();

  TCorexModel model;
  model.config.m = scenario.config.m;
  model.config.seed = scenario.config.seed;
  model.period_means = Eigen::MatrixXd::Zero(T, p);
  model.period_stds.resize(T, p);
  model.weights.reserve(static_cast<std::size_t>(T));
  model.covariances.reserve(static_cast<std::size_t>(T));

  for (Eigen::Index t = 0; t < T; ++t) {
    const DiagLowRank& raw = scenario.truth[static_cast<std::size_t>(t)];
    // sigma_i^2 is the raw diagonal d_i + sum_j u(j, i)^2; rescaling by
    // 1/sigma recovers the correlation-space factorization exactly.
    const Eigen::VectorXd sigma =
        (raw.d.array() + raw.u.array().square().colwise().sum().transpose())
            .sqrt();
    model.period_stds.row(t) = sigma.transpose();
    DiagLowRank corr;
    corr.sign = 1;
    corr.d = raw.d.array() / sigma.array().square();
    corr.u = raw.u.array().rowwise() / sigma.transpose().array();
    corr.validate();
    model.weights.push_back(corr.u);
    model.covariances.push_back(std::move(corr));
  }
  model.validate();
  return model;
}

}  // namespace tempcov
