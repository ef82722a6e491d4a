#include "tempcov/tcorex.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <string>

#include "tempcov/adam.hpp"
#include "tempcov/corex.hpp"
#include "tempcov/errors.hpp"
#include "tempcov/parallel.hpp"
#include "tempcov/rng.hpp"

namespace tempcov {

namespace {

// Keeps the l2 penalty gradient finite when consecutive weights coincide;
// the penalty value itself stays exact.
constexpr double kL2GradientFloor = 1e-12;

// Divergence guard on the window-smoothed objective: within a round it may
// not rise above its running minimum by more than this fraction of the
// fit-wide smoothed range (and by more than the absolute slack, so the tiny
// ranges of an almost-converged fit cannot trip it).  The objective is
// stochastic — every evaluation re-samples the annealing noise — so the rise
// must also dwarf the standard error of a window mean under the step-to-step
// jitter actually observed this round; with few samples per period that
// jitter is O(1) and fixed thresholds alone would misread it as divergence.
constexpr double kGuardFraction = 0.25;
constexpr double kGuardAbsolute = 1.0;
constexpr double kGuardNoiseSigmas = 8.0;

// One period's contiguous row range within the concatenated training matrix.
struct PeriodSlice {
  Eigen::Index row_begin = 0;
  Eigen::Index row_count = 0;
  Eigen::VectorXd c;                        // normalized sample weights
  std::vector<Eigen::Index> segment_ends;   // per-block noise boundaries
};

struct TrainContext {
  Eigen::MatrixXd xf;  // all standardized blocks stacked, n_all x p
  std::vector<PeriodSlice> slices;
  Eigen::Index T = 0;
  Eigen::Index p = 0;
};

TrainContext build_context(const TemporalDataset& standardized,
                           const FitConfig& cfg) {
  TrainContext ctx;
  ctx.T = standardized.num_periods();
  ctx.p = standardized.num_variables();

  std::vector<Eigen::Index> offsets(static_cast<std::size_t>(ctx.T) + 1, 0);
  for (Eigen::Index t = 0; t < ctx.T; ++t) {
    offsets[t + 1] = offsets[t] + standardized.blocks[t].rows();
  }
  ctx.xf.resize(offsets.back(), ctx.p);
  for (Eigen::Index t = 0; t < ctx.T; ++t) {
    ctx.xf.middleRows(offsets[t], standardized.blocks[t].rows()) =
        standardized.blocks[t];
  }

  ctx.slices.resize(static_cast<std::size_t>(ctx.T));
  for (Eigen::Index t = 0; t < ctx.T; ++t) {
    const auto weights = sample_weights(static_cast<int>(t),
                                        static_cast<int>(ctx.T), cfg.beta,
                                        cfg.weight_cutoff);
    // The surviving tau form a contiguous interval around t.
    const Eigen::Index lo = weights.front().first;
    const Eigen::Index hi = weights.back().first;
    PeriodSlice& slice = ctx.slices[static_cast<std::size_t>(t)];
    slice.row_begin = offsets[lo];
    slice.row_count = offsets[hi + 1] - offsets[lo];

    double norm = 0.0;
    for (const auto& [tau, alpha] : weights) {
      norm += alpha * static_cast<double>(standardized.blocks[tau].rows());
    }
    slice.c.resize(slice.row_count);
    Eigen::Index local = 0;
    for (const auto& [tau, alpha] : weights) {
      const Eigen::Index rows = standardized.blocks[tau].rows();
      slice.c.segment(local, rows).setConstant(alpha / norm);
      local += rows;
      slice.segment_ends.push_back(local);
    }
  }
  return ctx;
}

[[noreturn]] void throw_gradient_location(const Eigen::MatrixXd& grad,
                                          Eigen::Index t) {
  for (Eigen::Index j = 0; j < grad.rows(); ++j) {
    for (Eigen::Index i = 0; i < grad.cols(); ++i) {
      if (!std::isfinite(grad(j, i))) {
        throw NumericalError("non-finite gradient at period " +
                             std::to_string(t + 1) + ", factor " +
                             std::to_string(j + 1) + ", variable " +
                             std::to_string(i + 1));
      }
    }
  }
  throw NumericalError("non-finite gradient at period " + std::to_string(t + 1));
}

// Objective (and gradient into *gstack when non-null) of the full weight
// stack at annealing level eps, with noise streams keyed by (seed, step).
double eval_stack(const TrainContext& ctx, const FitConfig& cfg,
                  const Eigen::MatrixXd& wstack, double eps,
                  std::uint64_t noise_seed, std::uint64_t step,
                  Eigen::MatrixXd& dtilde, Eigen::MatrixXd* gstack) {
  const Eigen::Index m = wstack.rows() / std::max<Eigen::Index>(ctx.T, 1);
  const Eigen::MatrixXd* data = &ctx.xf;
  if (eps > 0.0) {
    // dtilde = sqrt(1 - eps^2) x + eps E, drawn fresh each step.
    Rng anneal = Rng::stream(noise_seed, {tag(StreamTag::kAnnealNoise), step});
    dtilde.resize(ctx.xf.rows(), ctx.xf.cols());
    anneal.fill_normal(dtilde);
    dtilde = eps * dtilde + std::sqrt(1.0 - eps * eps) * ctx.xf;
    data = &dtilde;
  }

  std::vector<double> period_obj(static_cast<std::size_t>(ctx.T), 0.0);
  parallel_for(
      static_cast<std::size_t>(ctx.T),
      [&](std::size_t ti) {
        const Eigen::Index t = static_cast<Eigen::Index>(ti);
        const PeriodSlice& slice = ctx.slices[ti];
        WeightedRows rows{data->middleRows(slice.row_begin, slice.row_count),
                          slice.c, slice.segment_ends};
        Rng z = Rng::stream(noise_seed,
                            {tag(StreamTag::kLatentNoise), step,
                             static_cast<std::uint64_t>(t)});
        PeriodEval pe = period_objective_gradient(
            wstack.middleRows(t * m, m), rows, NoiseMode::kSampled, &z,
            gstack != nullptr);
        if (!std::isfinite(pe.objective)) {
          throw NumericalError("objective of period " + std::to_string(t + 1) +
                               " is non-finite");
        }
        if (gstack != nullptr) {
          if (!pe.grad.allFinite()) throw_gradient_location(pe.grad, t);
          gstack->middleRows(t * m, m) = pe.grad;
        }
        period_obj[ti] = pe.objective;
      },
      cfg.threads);

  // Ordered reduction: results are bitwise independent of thread schedule.
  double total = std::accumulate(period_obj.begin(), period_obj.end(), 0.0);

  if (cfg.lambda > 0.0 && ctx.T > 1 && m > 0) {
    for (Eigen::Index t = 0; t + 1 < ctx.T; ++t) {
      const Eigen::MatrixXd diff =
          wstack.middleRows((t + 1) * m, m) - wstack.middleRows(t * m, m);
      if (cfg.phi == PenaltyKind::kL1) {
        total += cfg.lambda * diff.array().abs().sum();
        if (gstack != nullptr) {
          const Eigen::MatrixXd sub =
              cfg.lambda * diff.array().sign().matrix();
          gstack->middleRows((t + 1) * m, m) += sub;
          gstack->middleRows(t * m, m) -= sub;
        }
      } else {
        const double sq = diff.squaredNorm();
        total += cfg.lambda * std::sqrt(sq);
        if (gstack != nullptr) {
          const double scale =
              cfg.lambda / std::sqrt(sq + kL2GradientFloor);
          gstack->middleRows((t + 1) * m, m) += scale * diff;
          gstack->middleRows(t * m, m) -= scale * diff;
        }
      }
    }
  }
  if (!std::isfinite(total)) {
    throw NumericalError("total objective is non-finite");
  }
  return total;
}

double window_mean(const std::vector<double>& values, std::size_t begin,
                   std::size_t count) {
  double sum = 0.0;
  for (std::size_t k = begin; k < begin + count; ++k) sum += values[k];
  return sum / static_cast<double>(count);
}

struct EngineOut {
  Eigen::MatrixXd wstack;
  FitLog log;
};

EngineOut run_engine(const TrainContext& ctx, const FitConfig& cfg,
                     int steps_per_round, Eigen::MatrixXd wstack) {
  const auto start = std::chrono::steady_clock::now();
  FitLog log;
  AdamState adam = AdamState::zeros(wstack.rows(), wstack.cols());
  Eigen::MatrixXd gstack(wstack.rows(), wstack.cols());
  Eigen::MatrixXd dtilde;
  std::uint64_t gstep = 0;

  const std::size_t window = static_cast<std::size_t>(cfg.convergence_window);
  double smoothed_min = std::numeric_limits<double>::infinity();
  double smoothed_max = -std::numeric_limits<double>::infinity();

  for (std::size_t round = 0; round < cfg.anneal_schedule.size(); ++round) {
    const double eps = cfg.anneal_schedule[round];
    FitRoundLog rl;
    rl.epsilon = eps;
    rl.objectives.reserve(static_cast<std::size_t>(steps_per_round));
    double round_smoothed_min = std::numeric_limits<double>::infinity();
    double diff_sq_sum = 0.0;  // successive-difference jitter, this round

    for (int step = 0; step < steps_per_round; ++step) {
      double obj;
      try {
        obj = eval_stack(ctx, cfg, wstack, eps, cfg.seed, gstep, dtilde,
                         &gstack);
      } catch (const NumericalError& e) {
        throw NumericalError("divergence at annealing round " +
                             std::to_string(round + 1) + ", step " +
                             std::to_string(step + 1) + ": " + e.what());
      }
      rl.objectives.push_back(obj);

      const std::size_t have = rl.objectives.size();
      if (have >= 2) {
        const double diff = obj - rl.objectives[have - 2];
        diff_sq_sum += diff * diff;
      }
      if (have >= window) {
        const double smoothed = window_mean(rl.objectives, have - window,
                                            window);
        round_smoothed_min = std::min(round_smoothed_min, smoothed);
        smoothed_min = std::min(smoothed_min, smoothed);
        smoothed_max = std::max(smoothed_max, smoothed);
        const double rise = smoothed - round_smoothed_min;
        // White jitter with successive-difference variance 2 sigma^2 puts the
        // window mean's standard error at sigma / sqrt(window).
        const double noise_floor =
            kGuardNoiseSigmas *
            std::sqrt(diff_sq_sum / (2.0 * static_cast<double>(have - 1)) /
                      static_cast<double>(window));
        if (rise > kGuardAbsolute &&
            rise > kGuardFraction * (smoothed_max - smoothed_min) &&
            rise > noise_floor) {
          throw NumericalError(
              "divergence at annealing round " + std::to_string(round + 1) +
              ", step " + std::to_string(step + 1) +
              ": smoothed objective rose by " + std::to_string(rise));
        }
      }
      if (have >= 2 * window) {
        const double prev =
            window_mean(rl.objectives, have - 2 * window, window);
        const double cur = window_mean(rl.objectives, have - window, window);
        if (std::abs(cur - prev) <
            cfg.convergence_tol * std::max(1.0, std::abs(prev))) {
          rl.converged_early = true;
          break;
        }
      }
      adam_step(wstack, gstack, adam, cfg.adam_lr, cfg.adam_beta1,
                cfg.adam_beta2, cfg.adam_eps);
      ++gstep;
    }
    log.rounds.push_back(std::move(rl));
  }

  log.final_objective = log.rounds.back().objectives.back();
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  EngineOut out;
  out.wstack = std::move(wstack);
  out.log = std::move(log);
  return out;
}

Eigen::MatrixXd random_initial_weights(int m, Eigen::Index p,
                                       std::uint64_t seed) {
  Eigen::MatrixXd w(m, p);
  // N(0, 1/p) keeps the initial latent variances O(1) on standardized data.
  Rng rng = Rng::stream(seed, {tag(StreamTag::kWeightsInit)});
  rng.fill_normal(w);
  w /= std::sqrt(static_cast<double>(p));
  return w;
}

// Population standardization of all periods pooled, for initialization.
Eigen::MatrixXd pooled_standardized(const TemporalDataset& raw) {
  const Eigen::Index p = raw.num_variables();
  const Eigen::Index n = raw.total_samples();
  Eigen::MatrixXd all(n, p);
  Eigen::Index offset = 0;
  for (const auto& block : raw.blocks) {
    all.middleRows(offset, block.rows()) = block;
    offset += block.rows();
  }
  const Eigen::RowVectorXd mean = all.colwise().mean();
  all.rowwise() -= mean;
  const Eigen::RowVectorXd var =
      all.array().square().colwise().sum() / static_cast<double>(n);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(var[i] > 0.0)) {
      throw ZeroVarianceError("variable x" + std::to_string(i + 1) +
                              " is constant across the pooled dataset");
    }
  }
  all.array().rowwise() /= var.array().sqrt();
  return all;
}

std::vector<BlockRef> period_blocks(const TemporalDataset& standardized,
                                    const FitConfig& cfg, Eigen::Index t) {
  const auto weights = sample_weights(static_cast<int>(t),
                                      static_cast<int>(
                                          standardized.num_periods()),
                                      cfg.beta, cfg.weight_cutoff);
  std::vector<BlockRef> blocks;
  blocks.reserve(weights.size());
  for (const auto& [tau, alpha] : weights) {
    blocks.push_back(BlockRef{standardized.blocks[tau], alpha});
  }
  return blocks;
}

}  // namespace

std::string FitLog::to_json_string() const {
  nlohmann::json j;
  j["version"] = 1;
  j["final_objective"] = final_objective;
  j["wall_seconds"] = wall_seconds;
  nlohmann::json rounds_json = nlohmann::json::array();
  for (const auto& round : rounds) {
    rounds_json.push_back({{"epsilon", round.epsilon},
                           {"objectives", round.objectives},
                           {"converged_early", round.converged_early}});
  }
  j["rounds"] = std::move(rounds_json);
  return j.dump(2);
}

double temporal_penalty(std::span<const Eigen::MatrixXd> weights,
                        PenaltyKind phi) {
  if (weights.empty()) {
    throw InvalidArgumentError("temporal penalty needs at least one period");
  }
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < weights.size(); ++t) {
    if (weights[t].rows() != weights[t + 1].rows() ||
        weights[t].cols() != weights[t + 1].cols()) {
      throw DimensionError("weight shapes differ between periods " +
                           std::to_string(t + 1) + " and " +
                           std::to_string(t + 2));
    }
    const Eigen::MatrixXd diff = weights[t + 1] - weights[t];
    if (phi == PenaltyKind::kL1) {
      total += diff.array().abs().sum();
    } else {
      total += diff.norm();
    }
  }
  return total;
}

namespace {

Eigen::MatrixXd stack_weights(std::span<const Eigen::MatrixXd> weights,
                              const TrainContext& ctx) {
  if (static_cast<Eigen::Index>(weights.size()) != ctx.T) {
    throw DimensionError("weight list length differs from period count");
  }
  const Eigen::Index m = weights.front().rows();
  Eigen::MatrixXd wstack(ctx.T * m, ctx.p);
  for (Eigen::Index t = 0; t < ctx.T; ++t) {
    const auto& w = weights[static_cast<std::size_t>(t)];
    if (w.rows() != m || w.cols() != ctx.p) {
      throw DimensionError("weight matrix shapes differ across periods");
    }
    wstack.middleRows(t * m, m) = w;
  }
  return wstack;
}

}  // namespace

double tcorex_objective(std::span<const Eigen::MatrixXd> weights,
                        const TemporalDataset& standardized,
                        const FitConfig& config, double epsilon,
                        std::uint64_t noise_seed, std::uint64_t step) {
  standardized.validate();
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InvalidArgumentError("epsilon must lie in [0, 1]");
  }
  TrainContext ctx = build_context(standardized, config);
  const Eigen::MatrixXd wstack = stack_weights(weights, ctx);
  Eigen::MatrixXd dtilde;
  return eval_stack(ctx, config, wstack, epsilon, noise_seed, step, dtilde,
                    nullptr);
}

std::pair<double, std::vector<Eigen::MatrixXd>> tcorex_objective_gradient(
    std::span<const Eigen::MatrixXd> weights,
    const TemporalDataset& standardized, const FitConfig& config,
    double epsilon, std::uint64_t noise_seed, std::uint64_t step) {
  standardized.validate();
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InvalidArgumentError("epsilon must lie in [0, 1]");
  }
  TrainContext ctx = build_context(standardized, config);
  const Eigen::MatrixXd wstack = stack_weights(weights, ctx);
  const Eigen::Index m = weights.front().rows();
  Eigen::MatrixXd gstack(wstack.rows(), wstack.cols());
  Eigen::MatrixXd dtilde;
  const double obj = eval_stack(ctx, config, wstack, epsilon, noise_seed, step,
                                dtilde, &gstack);
  std::vector<Eigen::MatrixXd> grads;
  grads.reserve(static_cast<std::size_t>(ctx.T));
  for (Eigen::Index t = 0; t < ctx.T; ++t) {
    grads.emplace_back(gstack.middleRows(t * m, m));
  }
  return {obj, std::move(grads)};
}

LinearCorexResult fit_linear_corex(
    const Eigen::Ref<const Eigen::MatrixXd>& standardized, int m,
    const FitConfig& config) {
  config.validate();
  if (m < 0) throw InvalidArgumentError("m must be >= 0");
  FitConfig cfg = config;
  cfg.m = m;
  cfg.lambda = 0.0;

  TemporalDataset ds;
  ds.blocks.emplace_back(standardized);
  ds.validate();
  TrainContext ctx = build_context(ds, cfg);

  EngineOut out = run_engine(
      ctx, cfg, cfg.steps_per_round,
      random_initial_weights(m, ctx.p, cfg.seed));

  LinearCorexResult result;
  result.weights = std::move(out.wstack);
  const BlockRef block{ds.blocks.front(), 1.0};
  const MomentStats stats = compute_moments(
      result.weights, std::span<const BlockRef>(&block, 1),
      NoiseMode::kAnalytic, nullptr);
  result.covariance = covariance_estimate(stats);
  result.log = std::move(out.log);
  return result;
}

Eigen::MatrixXd pooled_init_weights(const TemporalDataset& raw,
                                    const FitConfig& config) {
  config.validate();
  raw.validate();
  FitConfig init_cfg = config;
  init_cfg.seed = Rng::derive_key(config.seed, {tag(StreamTag::kInitFit)});
  init_cfg.steps_per_round = config.init_steps_per_round;
  return fit_linear_corex(pooled_standardized(raw), config.m, init_cfg)
      .weights;
}

TCorexModel fit_with_init(const TemporalDataset& raw, const FitConfig& config,
                          const Eigen::MatrixXd& initial_weights,
                          FitLog* log) {
  config.validate();
  raw.validate();

  const TemporalDataset standardized =
      standardize(raw, config.beta, config.weight_cutoff);
  TrainContext ctx = build_context(standardized, config);
  const Eigen::Index T = ctx.T;
  const Eigen::Index p = ctx.p;
  const int m = config.m;
  if (initial_weights.rows() != m || initial_weights.cols() != p) {
    throw DimensionError("initial weights must be m x p");
  }

  Eigen::MatrixXd wstack(T * m, p);
  for (Eigen::Index t = 0; t < T; ++t) {
    wstack.middleRows(t * m, m) = initial_weights;
  }

  EngineOut out = run_engine(ctx, config, config.steps_per_round,
                             std::move(wstack));

  TCorexModel model;
  model.config = config;
  model.period_means = standardized.period_means;
  model.period_stds = standardized.period_stds;
  model.weights.reserve(static_cast<std::size_t>(T));
  model.covariances.reserve(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    model.weights.emplace_back(out.wstack.middleRows(t * m, m));
    const auto blocks = period_blocks(standardized, config, t);
    const MomentStats stats =
        compute_moments(model.weights.back(), blocks, NoiseMode::kAnalytic,
                        nullptr);
    model.covariances.push_back(covariance_estimate(stats));
  }
  model.validate();
  if (log != nullptr) *log = std::move(out.log);
  return model;
}

TCorexModel fit(const TemporalDataset& raw, const FitConfig& config,
                FitLog* log) {
  config.validate();
  raw.validate();
  // Pooled initialization: linear CorEx on the globally standardized
  // concatenation, broadcast to every period.  A single period
  // needs no pooled stage — it would be the same fit run twice — so T = 1
  // starts from the random init directly and reduces to fit_linear_corex.
  Eigen::MatrixXd w0;
  if (raw.num_periods() > 1) {
    w0 = pooled_init_weights(raw, config);
  } else {
    w0 = random_initial_weights(config.m, raw.num_variables(), config.seed);
  }
  return fit_with_init(raw, config, w0, log);
}

}  // namespace tempcov
