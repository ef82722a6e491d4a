#include "tempcov/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>

#include "tempcov/adam.hpp"
#include "tempcov/dataset.hpp"
#include "tempcov/errors.hpp"
#include "tempcov/rng.hpp"
#include "tempcov/tcorex.hpp"

namespace tempcov {

namespace {

// One timed run: `steps` optimizer steps at annealing level 0.6 (so the
// noise-mixing cost is included), returning seconds for the whole run.
double time_steps(const TemporalDataset& standardized, const FitConfig& cfg,
                  int steps, std::uint64_t seed) {
  const Eigen::Index T = standardized.num_periods();
  const Eigen::Index p = standardized.num_variables();

  std::vector<Eigen::MatrixXd> weights;
  weights.reserve(static_cast<std::size_t>(T));
  Rng init = Rng::stream(seed, {tag(StreamTag::kWeightsInit)});
  Eigen::MatrixXd w0(cfg.m, p);
  init.fill_normal(w0);
  w0 /= std::sqrt(static_cast<double>(p));
  for (Eigen::Index t = 0; t < T; ++t) weights.push_back(w0);

  AdamState adam = AdamState::zeros(T * cfg.m, p);
  Eigen::MatrixXd stacked(T * cfg.m, p);

  const auto start = std::chrono::steady_clock::now();
  for (int step = 0; step < steps; ++step) {
    auto [obj, grads] = tcorex_objective_gradient(
        weights, standardized, cfg, /*epsilon=*/0.6, seed,
        static_cast<std::uint64_t>(step));
    (void)obj;
    for (Eigen::Index t = 0; t < T; ++t) {
      stacked.middleRows(t * cfg.m, cfg.m) = weights[static_cast<std::size_t>(t)];
    }
    Eigen::MatrixXd gstack(T * cfg.m, p);
    for (Eigen::Index t = 0; t < T; ++t) {
      gstack.middleRows(t * cfg.m, cfg.m) =
          grads[static_cast<std::size_t>(t)];
    }
    adam_step(stacked, gstack, adam, cfg.adam_lr, cfg.adam_beta1,
              cfg.adam_beta2, cfg.adam_eps);
    for (Eigen::Index t = 0; t < T; ++t) {
      weights[static_cast<std::size_t>(t)] = stacked.middleRows(t * cfg.m, cfg.m);
    }
  }
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

}  // namespace

std::string BenchResult::table_text() const {
  std::ostringstream out;
  out << "# p seconds_per_step total_seconds\n";
  out.precision(6);
  for (const BenchPoint& point : points) {
    out << point.p << ' ' << point.seconds_per_step << ' '
        << point.total_seconds << '\n';
  }
  out << "# loglog_slope " << loglog_slope << '\n';
  return out.str();
}

BenchResult benchmark_step_scaling(std::span<const Eigen::Index> ps, int m,
                                   int T, int samples_per_period, int steps,
                                   std::uint64_t seed, int threads) {
  if (ps.size() < 2) {
    throw InvalidArgumentError("scaling benchmark needs at least two p values");
  }
  if (m < 1 || T < 1 || samples_per_period < 2 || steps < 1) {
    throw InvalidArgumentError("benchmark parameters out of range");
  }

  BenchResult result;
  for (const Eigen::Index p : ps) {
    // Random standard-normal data; the step cost does not depend on values.
    Rng data_rng = Rng::stream(seed, {tag(StreamTag::kSamples),
                                      static_cast<std::uint64_t>(p)});
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      Eigen::MatrixXd block(samples_per_period, p);
      data_rng.fill_normal(block);
      blocks.push_back(std::move(block));
    }
    TemporalDataset raw = TemporalDataset::from_blocks(std::move(blocks));
    FitConfig cfg;
    cfg.m = m;
    cfg.seed = seed;
    cfg.threads = threads;
    const TemporalDataset standardized =
        standardize(raw, cfg.beta, cfg.weight_cutoff);

    time_steps(standardized, cfg, 1, seed);  // warmup: page/alloc effects
    std::array<double, 3> runs;
    for (double& run : runs) {
      run = time_steps(standardized, cfg, steps, seed);
    }
    std::sort(runs.begin(), runs.end());
    const double total = runs[1];
    result.points.push_back(
        BenchPoint{p, total / static_cast<double>(steps), total});
  }

  // Least-squares slope of log(time) against log(p).
  const std::size_t n = result.points.size();
  double mx = 0.0, my = 0.0;
  for (const BenchPoint& point : result.points) {
    mx += std::log(static_cast<double>(point.p));
    my += std::log(point.seconds_per_step);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (const BenchPoint& point : result.points) {
    const double dx = std::log(static_cast<double>(point.p)) - mx;
    sxy += dx * (std::log(point.seconds_per_step) - my);
    sxx += dx * dx;
  }
  result.loglog_slope = sxy / sxx;
  return result;
}

}  // namespace tempcov
