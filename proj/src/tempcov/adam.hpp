#pragma once

#include <Eigen/Core>
#include <cmath>

#include "tempcov/errors.hpp"

namespace tempcov {

// First/second-moment accumulators for Adam, shaped like the parameter stack.
struct AdamState {
  Eigen::ArrayXXd m;
  Eigen::ArrayXXd v;
  long step = 0;

  static AdamState zeros(Eigen::Index rows, Eigen::Index cols) {
    AdamState state;
    state.m.setZero(rows, cols);
    state.v.setZero(rows, cols);
    return state;
  }
};

// Standard Adam update with bias correction, in place.
inline void adam_step(Eigen::MatrixXd& weights, const Eigen::MatrixXd& grad,
                      AdamState& state, double lr, double beta1, double beta2,
                      double eps) {
  if (weights.rows() != grad.rows() || weights.cols() != grad.cols() ||
      weights.rows() != state.m.rows() || weights.cols() != state.m.cols()) {
    throw DimensionError("adam_step: parameter/gradient/state shapes differ");
  }
  state.step += 1;
  const Eigen::ArrayXXd g = grad.array();
  state.m = beta1 * state.m + (1.0 - beta1) * g;
  state.v = beta2 * state.v + (1.0 - beta2) * g.square();
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  weights.array() -=
      lr * (state.m / bc1) / ((state.v / bc2).sqrt() + eps);
}

}  // namespace tempcov
