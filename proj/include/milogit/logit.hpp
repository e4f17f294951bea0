#pragma once

#include <cmath>

#include "milogit/error.hpp"
#include "milogit/linalg.hpp"

namespace milogit {

// H(u) = 1/(1+exp(-u)), evaluated so that exp never overflows for |u| <= 700.
inline double inv_logit(double u) {
  if (u >= 0.0) {
    double e = std::exp(-u);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(u);
  return e / (1.0 + e);
}

// H'(u) = H(u)(1 - H(u)).
inline double inv_logit_deriv(double u) {
  double h = inv_logit(u);
  return h * (1.0 - h);
}

// S(beta; x, y) = x * (y - H(beta'x)).
inline Vec score_contrib(const Vec& beta, const Vec& x, int y) {
  if (beta.size() != x.size())
    throw error("dim_mismatch", "score_contrib: beta and x lengths differ");
  return x * (static_cast<double>(y) - inv_logit(beta.dot(x)));
}

}  // namespace milogit
