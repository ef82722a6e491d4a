#include "tempcov/corex.hpp"

#include <cmath>
#include <string>

#include "tempcov/errors.hpp"

namespace tempcov {

namespace {

struct BlockLayout {
  Eigen::Index p = 0;
  Eigen::Index n_total = 0;
  double weight_norm = 0.0;           // N = sum_b alpha_b * rows_b
  std::vector<Eigen::Index> offsets;  // row offset of each block
};

BlockLayout validate_blocks(const Eigen::Ref<const Eigen::MatrixXd>& w,
                            std::span<const BlockRef> blocks, NoiseMode mode,
                            const Rng* rng) {
  if (blocks.empty()) {
    throw InvalidArgumentError("at least one sample block is required");
  }
  BlockLayout layout;
  layout.p = blocks.front().x.cols();
  layout.offsets.reserve(blocks.size());
  for (const auto& block : blocks) {
    if (block.x.cols() != layout.p) {
      throw DimensionError("sample blocks disagree on variable count");
    }
    if (block.x.rows() == 0) {
      throw InvalidArgumentError("sample block has no rows");
    }
    if (!(block.alpha >= 0.0) || !std::isfinite(block.alpha)) {
      throw InvalidArgumentError("block weight must be finite and >= 0");
    }
    layout.offsets.push_back(layout.n_total);
    layout.n_total += block.x.rows();
    layout.weight_norm += block.alpha * static_cast<double>(block.x.rows());
  }
  if (!(layout.weight_norm > 0.0)) {
    throw InvalidArgumentError("total block weight must be positive");
  }
  if (w.cols() != layout.p) {
    throw DimensionError("weights have " + std::to_string(w.cols()) +
                         " columns but data has " + std::to_string(layout.p) +
                         " variables");
  }
  if (!w.allFinite()) {
    throw NumericalError("factor weights contain non-finite values");
  }
  if (mode == NoiseMode::kSampled && rng == nullptr) {
    throw InvalidArgumentError("sampled noise mode requires an rng stream");
  }
  return layout;
}

void validate_rows(const Eigen::Ref<const Eigen::MatrixXd>& w,
                   const WeightedRows& rows, NoiseMode mode, const Rng* rng) {
  if (rows.x.rows() == 0) {
    throw InvalidArgumentError("weighted rows are empty");
  }
  if (rows.c.size() != rows.x.rows()) {
    throw DimensionError("row weight vector length disagrees with sample count");
  }
  if (w.cols() != rows.x.cols()) {
    throw DimensionError("weights have " + std::to_string(w.cols()) +
                         " columns but data has " +
                         std::to_string(rows.x.cols()) + " variables");
  }
  if (!w.allFinite()) {
    throw NumericalError("factor weights contain non-finite values");
  }
  if (rows.c.minCoeff() < 0.0 ||
      std::abs(rows.c.sum() - 1.0) > 1e-6) {
    throw InvalidArgumentError("row weights must be >= 0 and sum to 1");
  }
  if (!rows.segment_ends.empty() &&
      rows.segment_ends.back() != rows.x.rows()) {
    throw InvalidArgumentError("segment offsets must end at the row count");
  }
  if (mode == NoiseMode::kSampled && rng == nullptr) {
    throw InvalidArgumentError("sampled noise mode requires an rng stream");
  }
}

// Adds freshly drawn unit Gaussian noise to z, one segment at a time so the
// stream consumption matches the block-list route.
void add_segmented_noise(Eigen::MatrixXd& z,
                         std::span<const Eigen::Index> segment_ends, Rng* rng) {
  Eigen::Index begin = 0;
  Eigen::MatrixXd noise;
  auto consume = [&](Eigen::Index end) {
    noise.resize(end - begin, z.cols());
    rng->fill_normal(noise);
    z.middleRows(begin, end - begin) += noise;
    begin = end;
  };
  for (Eigen::Index end : segment_ends) consume(end);
  if (begin < z.rows()) consume(z.rows());
}

}  // namespace

Eigen::MatrixXd latent_factors(const Eigen::Ref<const Eigen::MatrixXd>& w,
                               std::span<const BlockRef> blocks, NoiseMode mode,
                               Rng* rng) {
  const BlockLayout layout = validate_blocks(w, blocks, mode, rng);
  const Eigen::Index m = w.rows();
  Eigen::MatrixXd z(layout.n_total, m);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto rows = z.middleRows(layout.offsets[b], blocks[b].x.rows());
    rows.noalias() = blocks[b].x * w.transpose();
    if (mode == NoiseMode::kSampled) {
      Eigen::MatrixXd noise(blocks[b].x.rows(), m);
      rng->fill_normal(noise);
      rows += noise;
    }
  }
  return z;
}

OwnedRows concat_blocks(std::span<const BlockRef> blocks) {
  if (blocks.empty()) {
    throw InvalidArgumentError("at least one sample block is required");
  }
  const Eigen::Index p = blocks.front().x.cols();
  Eigen::Index n = 0;
  double norm = 0.0;
  for (const auto& block : blocks) {
    n += block.x.rows();
    norm += block.alpha * static_cast<double>(block.x.rows());
  }
  OwnedRows rows;
  rows.x.resize(n, p);
  rows.c.resize(n);
  rows.segment_ends.reserve(blocks.size());
  Eigen::Index offset = 0;
  for (const auto& block : blocks) {
    rows.x.middleRows(offset, block.x.rows()) = block.x;
    rows.c.segment(offset, block.x.rows()).setConstant(block.alpha / norm);
    offset += block.x.rows();
    rows.segment_ends.push_back(offset);
  }
  return rows;
}

MomentStats compute_moments(const Eigen::Ref<const Eigen::MatrixXd>& w,
                            std::span<const BlockRef> blocks, NoiseMode mode,
                            Rng* rng) {
  const BlockLayout layout = validate_blocks(w, blocks, mode, rng);
  const Eigen::Index m = w.rows();
  const Eigen::Index p = layout.p;

  MomentStats stats;
  stats.mode = mode;
  stats.z = latent_factors(w, blocks, mode, rng);

  stats.c.resize(layout.n_total);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    stats.c.segment(layout.offsets[b], blocks[b].x.rows())
        .setConstant(blocks[b].alpha / layout.weight_norm);
  }

  stats.m2.setZero(m, m);
  stats.exz.setZero(m, p);
  stats.xsq.setZero(p);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const double cb = blocks[b].alpha / layout.weight_norm;
    if (cb == 0.0) continue;
    const auto zb = stats.z.middleRows(layout.offsets[b], blocks[b].x.rows());
    stats.m2.noalias() += cb * (zb.transpose() * zb);
    stats.exz.noalias() += cb * (zb.transpose() * blocks[b].x);
    stats.xsq += cb * blocks[b].x.colwise().squaredNorm().transpose();
  }
  stats.m2 = (0.5 * (stats.m2 + stats.m2.transpose())).eval();

  Eigen::ArrayXd ez2 = stats.m2.diagonal().array();
  if (mode == NoiseMode::kAnalytic) ez2 += 1.0;
  stats.ez2 = ez2.max(kVarianceFloor).matrix();

  const Eigen::ArrayXd sz = stats.ez2.array().sqrt();
  stats.r_true = (stats.exz.array().colwise() / sz).matrix();
  stats.r_corr =
      stats.r_true.cwiseMax(-kCorrelationClamp).cwiseMin(kCorrelationClamp);
  const Eigen::ArrayXXd r = stats.r_corr.array();
  const Eigen::ArrayXXd f = 1.0 / (1.0 - r.square());
  stats.b = (r * f).matrix();
  stats.r_vec = (r * stats.b.array()).colwise().sum().transpose().matrix();
  return stats;
}

double corex_objective(const MomentStats& stats,
                       std::span<const BlockRef> blocks) {
  const Eigen::Index m = stats.num_factors();
  const Eigen::Index p = stats.num_variables();
  if (blocks.empty()) {
    throw InvalidArgumentError("at least one sample block is required");
  }

  Eigen::ArrayXd res = Eigen::ArrayXd::Zero(p);
  if (m == 0) {
    res = stats.xsq.array();
  } else {
    const Eigen::ArrayXd sz = stats.ez2.array().sqrt();
    const Eigen::ArrayXd g = 1.0 / (1.0 + stats.r_vec.array());
    // nu_{l,i} = g_i * sum_j B_ji z_lj / sz_j via one predictor matrix.
    Eigen::MatrixXd projector =
        ((stats.b.array().colwise() / sz).rowwise() * g.transpose()).matrix();
    Eigen::Index offset = 0;
    for (const auto& block : blocks) {
      const Eigen::Index rows = block.x.rows();
      if (block.x.cols() != p || offset + rows > stats.z.rows()) {
        throw DimensionError("sample blocks disagree with moment statistics");
      }
      const auto zb = stats.z.middleRows(offset, rows);
      const auto cb = stats.c.segment(offset, rows);
      Eigen::MatrixXd nu = zb * projector;
      res += ((block.x - nu).array().square().colwise() * cb.array())
                 .colwise()
                 .sum()
                 .transpose();
      offset += rows;
    }
    if (offset != stats.z.rows()) {
      throw DimensionError("sample blocks disagree with moment statistics");
    }
  }

  res = res.max(kVarianceFloor);
  return 0.5 * (res.log().sum() + stats.ez2.array().log().sum());
}

DiagLowRank covariance_estimate(const MomentStats& stats) {
  const Eigen::ArrayXd g = 1.0 / (1.0 + stats.r_vec.array());
  DiagLowRank cov;
  cov.sign = +1;
  cov.u = (stats.b.array().rowwise() * g.transpose()).matrix();
  cov.d = (1.0 - cov.u.colwise().squaredNorm().transpose().array())
              .max(kCovarianceDiagFloor)
              .matrix();
  cov.validate();
  return cov;
}

PeriodEval period_objective_gradient(const Eigen::Ref<const Eigen::MatrixXd>& w,
                                     const WeightedRows& rows, NoiseMode mode,
                                     Rng* rng, bool want_grad) {
  validate_rows(w, rows, mode, rng);
  const Eigen::Index m = w.rows();
  const Eigen::Index p = rows.x.cols();
  const auto& x = rows.x;
  const Eigen::ArrayXd cvec = rows.c.array();

  // Weighted E[x_i^2]; constant in w, needed by the residual expansion.
  const Eigen::ArrayXd xsq =
      (x.array().square().colwise() * cvec).colwise().sum().transpose();

  PeriodEval out;
  if (m == 0) {
    out.objective = 0.5 * xsq.max(kVarianceFloor).log().sum();
    if (want_grad) out.grad.resize(0, p);
    return out;
  }

  // ---- forward ------------------------------------------------------------
  Eigen::MatrixXd z = x * w.transpose();
  if (mode == NoiseMode::kSampled) {
    add_segmented_noise(z, rows.segment_ends, rng);
  }
  Eigen::MatrixXd zw = rows.c.asDiagonal() * z;

  Eigen::MatrixXd m2 = z.transpose() * zw;
  m2 = (0.5 * (m2 + m2.transpose())).eval();
  Eigen::MatrixXd exz = zw.transpose() * x;

  Eigen::ArrayXd ez2_raw = m2.diagonal().array();
  if (mode == NoiseMode::kAnalytic) ez2_raw += 1.0;
  const Eigen::ArrayXd ez2 = ez2_raw.max(kVarianceFloor);
  const Eigen::ArrayXd ez2_pass = (ez2_raw >= kVarianceFloor).cast<double>();
  const Eigen::ArrayXd sz = ez2.sqrt();

  const Eigen::ArrayXXd rt = exz.array().colwise() / sz;  // unclamped
  const Eigen::ArrayXXd r = rt.max(-kCorrelationClamp).min(kCorrelationClamp);
  const Eigen::ArrayXXd clamp_pass =
      (rt.abs() <= kCorrelationClamp).cast<double>();
  const Eigen::ArrayXXd f = 1.0 / (1.0 - r.square());
  const Eigen::ArrayXXd bmat = r * f;
  const Eigen::ArrayXd rvec = (r * bmat).colwise().sum().transpose();
  const Eigen::ArrayXd g = 1.0 / (1.0 + rvec);

  // chat_{jj'} = E[z_j z_j'] / (sz_j sz_j'); q_i = b_i^T chat b_i equals
  // E[nu_i^2] / g_i^2, and s_i = sum_j B_ji rt_ji equals E[x_i nu_i] / g_i,
  // so res_i below is exactly the weighted E[(x_i - nu_i)^2].
  const Eigen::ArrayXXd chat =
      (m2.array().colwise() / sz).rowwise() / sz.transpose();
  const Eigen::MatrixXd cb_mat = chat.matrix() * bmat.matrix();
  const Eigen::ArrayXd q = (bmat * cb_mat.array()).colwise().sum().transpose();
  const Eigen::ArrayXd s = (bmat * rt).colwise().sum().transpose();

  const Eigen::ArrayXd res_raw = xsq - 2.0 * g * s + g.square() * q;
  const Eigen::ArrayXd res = res_raw.max(kVarianceFloor);
  const Eigen::ArrayXd res_pass = (res_raw >= kVarianceFloor).cast<double>();

  out.objective = 0.5 * (res.log().sum() + ez2.log().sum());
  if (!want_grad) return out;

  // ---- reverse ------------------------------------------------------------
  const Eigen::ArrayXd dres = 0.5 * res_pass / res;
  const Eigen::ArrayXd ds = -2.0 * g * dres;
  const Eigen::ArrayXd dg = dres * (-2.0 * s + 2.0 * g * q);
  const Eigen::ArrayXd dq = dres * g.square();
  const Eigen::ArrayXd drvec = -g.square() * dg;

  Eigen::ArrayXXd db = rt.rowwise() * ds.transpose() +
                       2.0 * (cb_mat.array().rowwise() * dq.transpose());
  const Eigen::MatrixXd dchat =
      (bmat.rowwise() * dq.transpose()).matrix() * bmat.matrix().transpose();

  // dB/dR = (1 + R^2) F^2 and d(r_vec)/dR = 2 R F^2, gated by the clamp.
  Eigen::ArrayXXd dr = db * (1.0 + r.square()) * f.square() +
                       (2.0 * r * f.square()).rowwise() * drvec.transpose();
  Eigen::ArrayXXd drt = bmat.rowwise() * ds.transpose() + clamp_pass * dr;

  const Eigen::MatrixXd dexz = (drt.colwise() / sz).matrix();
  Eigen::ArrayXd dsz = -(drt * rt).rowwise().sum() / sz;
  dsz += -2.0 * (dchat.array() * chat).rowwise().sum() / sz;

  Eigen::ArrayXXd dm2 =
      (dchat.array().colwise() / sz).rowwise() / sz.transpose();
  Eigen::ArrayXd dez2 = 0.5 / ez2 + dsz / (2.0 * sz);
  dez2 *= ez2_pass;
  dm2.matrix().diagonal() += dez2.matrix();

  // z-level adjoint: m2 and exz both read z (dm2 is symmetric).
  Eigen::MatrixXd dz = 2.0 * (zw * dm2.matrix());
  Eigen::MatrixXd xdexz(x.rows(), m);
  xdexz.noalias() = x * dexz.transpose();
  dz += rows.c.asDiagonal() * xdexz;

  out.grad.noalias() = dz.transpose() * x;
  return out;
}

}  // namespace tempcov
