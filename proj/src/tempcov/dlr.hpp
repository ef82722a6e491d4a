#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>

namespace tempcov {

// Symmetric p x p matrix in structured form
//
//   A = diag(d) + sign * u^T u,        u is m x p, sign in {+1, -1},
//
// so covariance estimates (sign +1) and their inverses (sign -1, via
// Woodbury) share one representation.  All operations below cost
// O(m^2 p + m^3) or less; nothing ever materializes a p x p matrix except
// the explicit to_dense escape hatch.
struct DiagLowRank {
  Eigen::VectorXd d;  // length p
  Eigen::MatrixXd u;  // m x p, rows are rank-1 directions
  int sign = +1;

  Eigen::Index p() const { return d.size(); }
  Eigen::Index m() const { return u.rows(); }

  static DiagLowRank identity(Eigen::Index p);

  // Shape/sign/finiteness checks; throws InvalidArgumentError or
  // DimensionError.
  void validate() const;
};

// A * x for a p x k right-hand side; O(m k p).
Eigen::MatrixXd matmul(const DiagLowRank& a,
                       const Eigen::Ref<const Eigen::MatrixXd>& x);

// log det A for sign +1 instances with d > 0 (then A is positive definite):
//   log det(D + U^T U) = log det(I_m + U D^{-1} U^T) + sum_i log d_i.
// Throws NotPositiveDefiniteError when d has a non-positive entry or the
// m x m capacitance factorization fails.
double log_det(const DiagLowRank& a);

// Inverse of a sign +1 instance via Woodbury:
//   (D + U^T U)^{-1} = D^{-1} - V^T V,  V = L^{-1} U D^{-1},
// where L L^T = I_m + U D^{-1} U^T.  Result has sign -1.
DiagLowRank invert(const DiagLowRank& a);

// ||A - B||_F^2 without leaving structured form.  Requires matching p and
// matching sign; ranks may differ.
double frobenius_diff_sq(const DiagLowRank& a, const DiagLowRank& b);

// Per-variable decomposition of the squared Frobenius difference: entry i is
// the row sum sum_k (A_ik - B_ik)^2.  Every ordered pair (i, k) lands in
// exactly one row, so the entries sum to frobenius_diff_sq(a, b).
Eigen::VectorXd per_variable_change(const DiagLowRank& a, const DiagLowRank& b);

// Dense materialization (exactly symmetric); for oracles and small p only.
Eigen::MatrixXd to_dense(const DiagLowRank& a);

// --- serialization ---------------------------------------------------------

// JSON object {"p","m","sign","d","u"} with u as m rows of p numbers.
std::string dlr_to_json_string(const DiagLowRank& a);
DiagLowRank dlr_from_json_string(const std::string& text);
void save_dlr_json(const DiagLowRank& a, const std::string& path);
DiagLowRank load_dlr_json(const std::string& path);

// Little-endian binary: magic "DLR1", u32 p, u32 m, i8 sign, f64 d[p],
// f64 u[m*p] row-major.
void write_dlr_binary(std::ostream& out, const DiagLowRank& a);
DiagLowRank read_dlr_binary(std::istream& in);
void save_dlr_binary(const DiagLowRank& a, const std::string& path);
DiagLowRank load_dlr_binary(const std::string& path);

}  // namespace tempcov
