#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tempcov {

struct BenchPoint {
  Eigen::Index p = 0;
  double seconds_per_step = 0.0;
  double total_seconds = 0.0;
};

struct BenchResult {
  std::vector<BenchPoint> points;
  double loglog_slope = 0.0;

  // Whitespace-separated table: "p seconds_per_step total_seconds" rows
  // under a '#' header, closed by a "# loglog_slope <value>" line.
  std::string table_text() const;
};

// Times full optimizer steps (gradient of the stacked objective plus the
// Adam update) on random data at each p, fixed everything else.  The middle
// of three repeats is kept so one scheduling hiccup cannot skew the slope.
BenchResult benchmark_step_scaling(std::span<const Eigen::Index> ps, int m,
                                   int T, int samples_per_period, int steps,
                                   std::uint64_t seed, int threads = 0);

}  // namespace tempcov
