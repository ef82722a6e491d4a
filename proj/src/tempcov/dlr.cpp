#include "tempcov/dlr.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "tempcov/errors.hpp"

namespace tempcov {

namespace {

void require_same_shape_and_sign(const DiagLowRank& a, const DiagLowRank& b) {
  if (a.p() != b.p()) {
    throw DimensionError("diag-low-rank operands have different dimension: " +
                         std::to_string(a.p()) + " vs " + std::to_string(b.p()));
  }
  if (a.sign != b.sign) {
    throw InvalidArgumentError(
        "diag-low-rank difference requires matching signs");
  }
}

// Cholesky factor of the m x m capacitance matrix I + U D^{-1} U^T together
// with B = U D^{-1}; shared by log_det and invert.
struct Capacitance {
  Eigen::MatrixXd b;  // U D^{-1}, m x p
  Eigen::LLT<Eigen::MatrixXd> llt;
};

Capacitance factor_capacitance(const DiagLowRank& a) {
  a.validate();
  if (a.sign != +1) {
    throw InvalidArgumentError(
        "operation defined for sign +1 (covariance-like) matrices");
  }
  if (a.p() > 0 && a.d.minCoeff() <= 0.0) {
    throw NotPositiveDefiniteError(
        "diagonal part has a non-positive entry; matrix is not positive "
        "definite");
  }
  Capacitance cap;
  cap.b = a.u * a.d.cwiseInverse().asDiagonal();
  Eigen::MatrixXd m =
      Eigen::MatrixXd::Identity(a.m(), a.m());
  m.noalias() += cap.b * a.u.transpose();
  cap.llt.compute(m);
  if (cap.llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("capacitance matrix factorization failed");
  }
  return cap;
}

}  // namespace

DiagLowRank DiagLowRank::identity(Eigen::Index p) {
  DiagLowRank a;
  a.d = Eigen::VectorXd::Ones(p);
  a.u = Eigen::MatrixXd::Zero(0, p);
  a.sign = +1;
  return a;
}

void DiagLowRank::validate() const {
  if (sign != +1 && sign != -1) {
    throw InvalidArgumentError("diag-low-rank sign must be +1 or -1, got " +
                               std::to_string(sign));
  }
  if (u.cols() != d.size()) {
    throw DimensionError("diag-low-rank shape mismatch: d has " +
                         std::to_string(d.size()) + " entries but u has " +
                         std::to_string(u.cols()) + " columns");
  }
  if (!d.allFinite() || !u.allFinite()) {
    throw NumericalError("diag-low-rank contains non-finite values");
  }
}

Eigen::MatrixXd matmul(const DiagLowRank& a,
                       const Eigen::Ref<const Eigen::MatrixXd>& x) {
  a.validate();
  if (x.rows() != a.p()) {
    throw DimensionError("matmul: matrix is " + std::to_string(a.p()) + "x" +
                         std::to_string(a.p()) + " but operand has " +
                         std::to_string(x.rows()) + " rows");
  }
  Eigen::MatrixXd y = a.d.asDiagonal() * x;
  if (a.m() > 0) {
    // u^T (u x), never p x p.
    Eigen::MatrixXd ux = a.u * x;
    if (a.sign > 0) {
      y.noalias() += a.u.transpose() * ux;
    } else {
      y.noalias() -= a.u.transpose() * ux;
    }
  }
  return y;
}

double log_det(const DiagLowRank& a) {
  Capacitance cap = factor_capacitance(a);
  double result = a.d.array().log().sum();
  result += 2.0 * cap.llt.matrixLLT().diagonal().array().log().sum();
  return result;
}

DiagLowRank invert(const DiagLowRank& a) {
  Capacitance cap = factor_capacitance(a);
  DiagLowRank inv;
  inv.d = a.d.cwiseInverse();
  // V = L^{-1} (U D^{-1}) solved triangularly; (D + U^T U)^{-1} = D^{-1} - V^T V.
  inv.u = cap.llt.matrixL().solve(cap.b);
  inv.sign = -1;
  return inv;
}

double frobenius_diff_sq(const DiagLowRank& a, const DiagLowRank& b) {
  a.validate();
  b.validate();
  require_same_shape_and_sign(a, b);

  const Eigen::VectorXd dd = a.d - b.d;
  const Eigen::VectorXd u_colsq = a.u.colwise().squaredNorm();
  const Eigen::VectorXd v_colsq = b.u.colwise().squaredNorm();

  double total = dd.squaredNorm();
  total += 2.0 * a.sign * dd.dot(u_colsq - v_colsq);

  // Gram trick: sum_{ik} (u_i.u_k - v_i.v_k)^2 = ||UU^T||^2 - 2||UV^T||^2 + ||VV^T||^2.
  Eigen::MatrixXd guu = a.u * a.u.transpose();
  Eigen::MatrixXd guv = a.u * b.u.transpose();
  Eigen::MatrixXd gvv = b.u * b.u.transpose();
  total += guu.squaredNorm() - 2.0 * guv.squaredNorm() + gvv.squaredNorm();
  return total;
}

Eigen::VectorXd per_variable_change(const DiagLowRank& a, const DiagLowRank& b) {
  a.validate();
  b.validate();
  require_same_shape_and_sign(a, b);

  const Eigen::ArrayXd dd = (a.d - b.d).array();
  const Eigen::ArrayXd u_colsq = a.u.colwise().squaredNorm().transpose().array();
  const Eigen::ArrayXd v_colsq = b.u.colwise().squaredNorm().transpose().array();

  Eigen::MatrixXd guu = a.u * a.u.transpose();  // m_a x m_a
  Eigen::MatrixXd guv = a.u * b.u.transpose();  // m_a x m_b
  Eigen::MatrixXd gvv = b.u * b.u.transpose();  // m_b x m_b

  // Column i of (G U) dotted with u_i gives u_i^T G u_i, all i at once.
  Eigen::ArrayXd quad_uu =
      (a.u.cwiseProduct(guu * a.u)).colwise().sum().transpose().array();
  Eigen::ArrayXd quad_uv =
      (a.u.cwiseProduct(guv * b.u)).colwise().sum().transpose().array();
  Eigen::ArrayXd quad_vv =
      (b.u.cwiseProduct(gvv * b.u)).colwise().sum().transpose().array();

  Eigen::ArrayXd entries = dd.square() +
                           2.0 * a.sign * dd * (u_colsq - v_colsq) +
                           quad_uu - 2.0 * quad_uv + quad_vv;
  return entries.matrix();
}

Eigen::MatrixXd to_dense(const DiagLowRank& a) {
  a.validate();
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(a.p(), a.p());
  if (a.m() > 0) {
    // rankUpdate fills the lower triangle only; mirror it so the result is
    // exactly symmetric rather than symmetric up to rounding.
    dense.selfadjointView<Eigen::Lower>().rankUpdate(
        a.u.transpose(), static_cast<double>(a.sign));
    dense.triangularView<Eigen::StrictlyUpper>() =
        dense.transpose().triangularView<Eigen::StrictlyUpper>();
  }
  dense.diagonal() += a.d;
  return dense;
}

}  // namespace tempcov
