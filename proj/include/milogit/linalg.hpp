#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "milogit/error.hpp"

namespace milogit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct InverseResult {
  Mat inv;
  double cond1 = 0.0;  // 1-norm condition estimate ||A||_1 * ||A^-1||_1
  bool ok = false;
};

// Dense LU inverse with a 1-norm condition estimate.  Systems here are
// (1+p+q)-sized, so forming the inverse explicitly is fine.
inline InverseResult try_invert(const Mat& a, double cond_limit = 1e12) {
  InverseResult r;
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible()) return r;
  r.inv = lu.inverse();
  if (!r.inv.allFinite()) return r;
  r.cond1 = a.cwiseAbs().colwise().sum().maxCoeff() *
            r.inv.cwiseAbs().colwise().sum().maxCoeff();
  r.ok = std::isfinite(r.cond1) && r.cond1 <= cond_limit;
  return r;
}

// Inverse that rejects ill-conditioned input (guard used by the variance
// estimators; limit 1e12).
inline Mat invert_guarded(const Mat& a, const char* what) {
  InverseResult r = try_invert(a);
  if (!r.ok) {
    throw error("singular_matrix", std::string(what) +
                                       ": matrix is singular or ill-conditioned "
                                       "(1-norm condition estimate " +
                                       std::to_string(r.cond1) + ")");
  }
  return r.inv;
}

}  // namespace milogit
