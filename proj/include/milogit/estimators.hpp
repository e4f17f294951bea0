#pragma once

#include <string>
#include <vector>

#include "milogit/imputation.hpp"
#include "milogit/logit.hpp"
#include "milogit/selection.hpp"
#include "milogit/solver.hpp"

namespace milogit {

struct FitResult {
  std::string estimator;        // FULL, CC, SIPW, MI1, MI2
  std::string variance_method;  // NONE, INFO, IPW_SANDWICH, RUBIN, PROPOSED
  Vec beta;
  Mat cov;  // per-estimate covariance of beta_hat; empty when NONE or not converged
  Vec ase;
  SolveReport report;
  std::size_t n_used = 0;  // records entering the estimating equation's denominator
  int M = 0;               // imputation count (MI only)
};

namespace detail {

// Mean weighted complete-case score: (1/denom) sum_i delta_i1 w_i S_i(beta).
// FULL and CC use unit weights; SIPW uses 1/pi_1.  One shared code path keeps
// the arithmetic identical across estimators on complete data.
inline Vec cc_score(const Dataset& ds, const std::vector<double>& w, double denom,
                    const Vec& beta) {
  const int d = ds.d();
  Vec out = Vec::Zero(d);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.pattern(i) != Pattern::complete) continue;
    ds.design_with_donors(i, -1, -1, x.data());
    Eigen::Map<const Vec> xv(x.data(), d);
    double r = static_cast<double>(ds.y(i)) - inv_logit(xv.dot(beta));
    out += (w[i] * r) * xv;
  }
  return out / denom;
}

// Matching negative Jacobian: (1/denom) sum_i delta_i1 w_i X X' H'(beta'X).
inline Mat cc_neg_jacobian(const Dataset& ds, const std::vector<double>& w, double denom,
                           const Vec& beta) {
  const int d = ds.d();
  Mat out = Mat::Zero(d, d);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.pattern(i) != Pattern::complete) continue;
    ds.design_with_donors(i, -1, -1, x.data());
    Eigen::Map<const Vec> xv(x.data(), d);
    double h1 = inv_logit_deriv(xv.dot(beta));
    out.selfadjointView<Eigen::Lower>().rankUpdate(xv, w[i] * h1);
  }
  out = out.selfadjointView<Eigen::Lower>();
  return out / denom;
}

// Mean MI score: (1/n) sum_i (1/cnt_i) sum_v X_iv (y_i - H(beta'X_iv)).
inline Vec mi_score(const Dataset& ds, const CompletedSets& cs, const Vec& beta) {
  const int d = cs.d;
  Vec out = Vec::Zero(d);
  Vec tmp(d);
  for (std::size_t i = 0; i < cs.n; ++i) {
    double yi = ds.y(i);
    if (cs.cnt[i] == 1) {
      Eigen::Map<const Vec> xv(cs.design_ptr(i, 0), d);
      out += (yi - inv_logit(xv.dot(beta))) * xv;
    } else {
      tmp.setZero();
      for (int v = 0; v < cs.M; ++v) {
        Eigen::Map<const Vec> xv(cs.design_ptr(i, v), d);
        tmp += (yi - inv_logit(xv.dot(beta))) * xv;
      }
      out += tmp / static_cast<double>(cs.M);
    }
  }
  return out / static_cast<double>(cs.n);
}

// G-hat: (1/n) sum_i { delta_i1 X X' H' + (1/M) sum_k sum_v delta_ik X~ X~' H' }.
// Also the negative Jacobian of mi_score.
inline Mat mi_gmatrix(const Dataset& ds, const CompletedSets& cs, const Vec& beta) {
  const int d = cs.d;
  Mat out = Mat::Zero(d, d);
  const double invm = 1.0 / static_cast<double>(cs.M);
  for (std::size_t i = 0; i < cs.n; ++i) {
    if (cs.cnt[i] == 1) {
      Eigen::Map<const Vec> xv(cs.design_ptr(i, 0), d);
      out.selfadjointView<Eigen::Lower>().rankUpdate(xv, inv_logit_deriv(xv.dot(beta)));
    } else {
      for (int v = 0; v < cs.M; ++v) {
        Eigen::Map<const Vec> xv(cs.design_ptr(i, v), d);
        out.selfadjointView<Eigen::Lower>().rankUpdate(xv,
                                                       invm * inv_logit_deriv(xv.dot(beta)));
      }
    }
  }
  out = out.selfadjointView<Eigen::Lower>();
  return out / static_cast<double>(cs.n);
}

inline FitResult fit_weighted_complete(const Dataset& ds, const std::vector<double>& w,
                                       double denom, const char* label) {
  FitResult fr;
  fr.estimator = label;
  fr.variance_method = "NONE";
  fr.n_used = static_cast<std::size_t>(denom);
  Vec beta = Vec::Zero(ds.d());
  fr.report = solve_estimating_eq(
      [&](const Vec& b) { return cc_score(ds, w, denom, b); },
      [&](const Vec& b) { return cc_neg_jacobian(ds, w, denom, b); }, beta);
  fr.beta = beta;
  return fr;
}

inline void attach_information_cov(FitResult& fr, const Dataset& ds,
                                   const std::vector<double>& w, double denom) {
  if (!fr.report.converged) return;
  Mat g = cc_neg_jacobian(ds, w, denom, fr.beta);
  fr.cov = invert_guarded(g, "observed information") / denom;
  fr.ase = fr.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  fr.variance_method = "INFO";
}

}  // namespace detail

// Full-data maximum likelihood; requires a dataset with no missingness.
inline FitResult fit_full_ml(const Dataset& ds) {
  auto counts = ds.pattern_counts();
  if (counts[0] != ds.n())
    throw error("incomplete_data",
                "fit_full_ml needs fully observed data; " +
                    std::to_string(ds.n() - counts[0]) + " records have missing blocks");
  std::vector<double> w(ds.n(), 1.0);
  FitResult fr = detail::fit_weighted_complete(ds, w, static_cast<double>(ds.n()), "FULL");
  detail::attach_information_cov(fr, ds, w, static_cast<double>(ds.n()));
  return fr;
}

// Complete-case analysis: plain ML on the delta=1 subset.
inline FitResult fit_cc(const Dataset& ds) {
  auto counts = ds.pattern_counts();
  double ncc = static_cast<double>(counts[0]);
  if (counts[0] < static_cast<std::size_t>(ds.d()))
    throw error("too_few_complete",
                "complete cases (" + std::to_string(counts[0]) +
                    ") fewer than coefficients (" + std::to_string(ds.d()) + ")");
  std::vector<double> w(ds.n(), 1.0);
  FitResult fr = detail::fit_weighted_complete(ds, w, ncc, "CC");
  detail::attach_information_cov(fr, ds, w, ncc);
  return fr;
}

// Semiparametric inverse probability weighting: weights 1/pi_hat_1 per
// stratum; naive weighted sandwich covariance (pi_hat treated as known).
inline FitResult fit_sipw(const Dataset& ds, const SelectionTable& table) {
  const double n = static_cast<double>(ds.n());
  std::vector<double> w(ds.n(), 0.0);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.pattern(i) != Pattern::complete) continue;
    std::int32_t g = table.gid(i);
    w[i] = static_cast<double>(table.total(g)) / static_cast<double>(table.counts(g)[0]);
  }
  FitResult fr = detail::fit_weighted_complete(ds, w, n, "SIPW");
  fr.n_used = ds.n();
  if (fr.report.converged) {
    const int d = ds.d();
    Mat gw = detail::cc_neg_jacobian(ds, w, n, fr.beta);
    Mat mw = Mat::Zero(d, d);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (ds.pattern(i) != Pattern::complete) continue;
      ds.design_with_donors(i, -1, -1, x.data());
      Eigen::Map<const Vec> xv(x.data(), d);
      double r = w[i] * (static_cast<double>(ds.y(i)) - inv_logit(xv.dot(fr.beta)));
      mw.selfadjointView<Eigen::Lower>().rankUpdate(xv, r * r);
    }
    mw = mw.selfadjointView<Eigen::Lower>();
    mw /= n;
    Mat ginv = invert_guarded(gw, "weighted information");
    fr.cov = ginv * mw * ginv.transpose() / n;
    fr.ase = fr.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fr.variance_method = "IPW_SANDWICH";
  }
  return fr;
}

// MI point estimate (MI1 or MI2 according to how the CompletedSets were
// built).  Variances are attached separately (rubin_variance /
// proposed_variance).
inline FitResult fit_mi(const Dataset& ds, const CompletedSets& cs) {
  FitResult fr;
  fr.estimator = method_name(cs.method);
  fr.variance_method = "NONE";
  fr.n_used = cs.n;
  fr.M = cs.M;
  Vec beta = Vec::Zero(cs.d);
  fr.report = solve_estimating_eq(
      [&](const Vec& b) { return detail::mi_score(ds, cs, b); },
      [&](const Vec& b) { return detail::mi_gmatrix(ds, cs, b); }, beta);
  fr.beta = beta;
  return fr;
}

}  // namespace milogit
