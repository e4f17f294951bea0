#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "milogit/linalg.hpp"

namespace milogit {

struct SolveOptions {
  double tol = 1e-8;       // on the max-abs component of the score handed in
  int max_iter = 100;
  int max_halvings = 30;
  double beta_bound = 50.0;  // ||beta||_inf beyond this: separation / divergence
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double final_score_norm = std::numeric_limits<double>::quiet_NaN();
  std::string reason;  // empty on success
};

// Damped Newton for a vector estimating equation score(beta) = 0.
// neg_jacobian_fn must return -d(score)/d(beta) (positive definite for the
// logistic scores used here).  Step: beta <- beta + J^-1 * score, halved until
// the score norm decreases.  A numerically singular Jacobian gets one ridge
// repair of 1e-8 * (trace/dim) * I before the fit is declared failed.
template <class ScoreFn, class JacFn>
SolveReport solve_estimating_eq(ScoreFn&& score_fn, JacFn&& neg_jacobian_fn,
                                Vec& beta, const SolveOptions& opt = {}) {
  SolveReport rep;
  const int d = static_cast<int>(beta.size());
  Vec s = score_fn(beta);
  if (s.size() != d) throw error("dim_mismatch", "solver: score length != beta length");
  double norm = s.lpNorm<Eigen::Infinity>();
  bool ridge_used = false;

  for (int it = 0; it < opt.max_iter; ++it) {
    if (!s.allFinite()) {
      rep.iterations = it;
      rep.final_score_norm = std::numeric_limits<double>::quiet_NaN();
      rep.reason = "score not finite";
      return rep;
    }
    if (norm <= opt.tol) {
      rep.converged = true;
      rep.iterations = it;
      rep.final_score_norm = norm;
      return rep;
    }

    Mat j = neg_jacobian_fn(beta);
    Eigen::FullPivLU<Mat> lu(j);
    if (!lu.isInvertible()) {
      if (!ridge_used) {
        ridge_used = true;
        j.diagonal().array() += 1e-8 * (j.trace() / d);
        lu.compute(j);
      }
      if (!lu.isInvertible()) {
        rep.iterations = it;
        rep.final_score_norm = norm;
        rep.reason = "singular jacobian";
        return rep;
      }
    }
    Vec dir = lu.solve(s);
    if (!dir.allFinite()) {
      rep.iterations = it;
      rep.final_score_norm = norm;
      rep.reason = "non-finite newton step";
      return rep;
    }

    double t = 1.0;
    bool accepted = false;
    Vec trial, s_trial;
    for (int h = 0; h <= opt.max_halvings; ++h) {
      trial = beta + t * dir;
      s_trial = score_fn(trial);
      double trial_norm = s_trial.allFinite()
                              ? s_trial.lpNorm<Eigen::Infinity>()
                              : std::numeric_limits<double>::infinity();
      if (trial_norm < norm) {
        beta = trial;
        s = s_trial;
        norm = trial_norm;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      rep.iterations = it + 1;
      rep.final_score_norm = norm;
      rep.reason = "step halving stalled";
      return rep;
    }
    if (beta.lpNorm<Eigen::Infinity>() > opt.beta_bound) {
      rep.iterations = it + 1;
      rep.final_score_norm = norm;
      rep.reason = "diverging estimate (possible separation)";
      return rep;
    }
  }
  rep.iterations = opt.max_iter;
  rep.final_score_norm = norm;
  rep.reason = "max iterations reached";
  return rep;
}

}  // namespace milogit
