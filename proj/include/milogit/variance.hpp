#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "milogit/estimators.hpp"

namespace milogit {

// G-hat, the MI information plug-in: (1/n) sum_i { delta_i1 X X' H'(b'X)
// + (1/M) sum_k sum_v delta_ik X~ X~' H'(b'X~) }.  Equals the negative
// Jacobian of the mean MI score, which the acceptance checks verify against
// central differences.
inline Mat g_matrix(const Dataset& ds, const CompletedSets& cs, const Vec& beta) {
  return detail::mi_gmatrix(ds, cs, beta);
}

// Rubin-type combined covariance, literal form:
//   (1/n) Ginv { (1/M) sum_v sum_i U_vi U_vi' + (1+1/M)/(M-1) sum_v U_v U_v' } Ginv'
// with U_vi = n^{-1/2} (delta_i1 S_i + sum_k delta_ik S~_kiv) and U_v the sum
// over i.  The between term is uncentered.
inline Mat rubin_variance(const Dataset& ds, const CompletedSets& cs, const Vec& beta) {
  const int d = cs.d;
  const int M = cs.M;
  const double n = static_cast<double>(cs.n);
  Mat within = Mat::Zero(d, d);  // sum_i sum_v t_iv t_iv'
  Mat svs = Mat::Zero(d, M);     // column v: sum_i t_iv
  Vec t(d);
  for (std::size_t i = 0; i < cs.n; ++i) {
    const double yi = ds.y(i);
    if (cs.cnt[i] == 1) {
      Eigen::Map<const Vec> xv(cs.design_ptr(i, 0), d);
      t = (yi - inv_logit(xv.dot(beta))) * xv;
      within.selfadjointView<Eigen::Lower>().rankUpdate(t, static_cast<double>(M));
      svs.colwise() += t;
    } else {
      for (int v = 0; v < M; ++v) {
        Eigen::Map<const Vec> xv(cs.design_ptr(i, v), d);
        t = (yi - inv_logit(xv.dot(beta))) * xv;
        within.selfadjointView<Eigen::Lower>().rankUpdate(t, 1.0);
        svs.col(v) += t;
      }
    }
  }
  Mat between = Mat::Zero(d, d);
  for (int v = 0; v < M; ++v)
    between.selfadjointView<Eigen::Lower>().rankUpdate(svs.col(v), 1.0);
  within = within.selfadjointView<Eigen::Lower>();
  between = between.selfadjointView<Eigen::Lower>();

  Mat inner = within / (n * M) +
              between * ((1.0 + 1.0 / M) / (static_cast<double>(M - 1) * n));
  Mat ginv = invert_guarded(g_matrix(ds, cs, beta), "G matrix");
  return ginv * inner * ginv.transpose() / n;
}

// ---------------------------------------------------------------------------
// Conditional score means S*-hat: per-record averages of the complete-case
// score S_j(beta) over delta=1 records matching the conditioning key, with
// the same fallback chains as the donor pools.  A row is `none` either when
// the conditioning block is missing on record i (the row is then never
// multiplied by a nonzero coefficient) or when even the Y-keyed fallback is
// empty (an error if the row is actually needed).

struct SStarMI1 {
  Mat s2, s3, s4;  // n x d; undefined rows are zero
  std::vector<PoolUsed> lvl2, lvl3, lvl4;
};

struct SStarMI2 {
  Mat s;  // n x d, keyed by (Y, V)
  std::vector<PoolUsed> lvl;
};

namespace detail {

// Complete-case score rows; non-complete rows stay zero.
inline Mat complete_score_rows(const Dataset& ds, const Vec& beta) {
  const int d = ds.d();
  Mat sc = Mat::Zero(static_cast<Eigen::Index>(ds.n()), d);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.pattern(i) != Pattern::complete) continue;
    ds.design_with_donors(i, -1, -1, x.data());
    Eigen::Map<const Vec> xv(x.data(), d);
    double r = static_cast<double>(ds.y(i)) - inv_logit(xv.dot(beta));
    sc.row(i) = (r * xv).transpose();
  }
  return sc;
}

struct GroupScoreMeans {
  std::vector<double> sum;  // n_groups * d, delta=1 contributions in record order
  std::vector<std::int64_t> cnt;
};

inline GroupScoreMeans group_score_sums(const Dataset& ds, const GroupIndex& g, const Mat& sc) {
  const int d = static_cast<int>(sc.cols());
  GroupScoreMeans m;
  m.sum.assign(static_cast<std::size_t>(g.n_groups) * d, 0.0);
  m.cnt.assign(g.n_groups, 0);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.pattern(i) != Pattern::complete) continue;
    std::int32_t gi = g.gid[i];
    m.cnt[gi]++;
    double* s = m.sum.data() + static_cast<std::size_t>(gi) * d;
    for (int j = 0; j < d; ++j) s[j] += sc(static_cast<Eigen::Index>(i), j);
  }
  return m;
}

// One fallback level: write the group mean into row `row` of `dst` when the
// group has donors.
inline bool level_mean(const GroupScoreMeans& m, std::int32_t g, int d, Mat& dst,
                       Eigen::Index row) {
  if (g < 0 || m.cnt[g] == 0) return false;
  const double* s = m.sum.data() + static_cast<std::size_t>(g) * d;
  const double c = static_cast<double>(m.cnt[g]);
  for (int j = 0; j < d; ++j) dst(row, j) = s[j] / c;
  return true;
}

}  // namespace detail

inline SStarMI1 sstar_mi1(const Dataset& ds, const DonorIndex& ix, const Vec& beta) {
  const int d = ds.d();
  const auto n = static_cast<Eigen::Index>(ds.n());
  Mat sc = detail::complete_score_rows(ds, beta);
  auto m_yx2v = detail::group_score_sums(ds, ix.g_yx2v, sc);
  auto m_yx1v = detail::group_score_sums(ds, ix.g_yx1v, sc);
  auto m_yv = detail::group_score_sums(ds, ix.g_yv, sc);
  auto m_y = detail::group_score_sums(ds, ix.g_y, sc);

  SStarMI1 out;
  out.s2 = Mat::Zero(n, d);
  out.s3 = Mat::Zero(n, d);
  out.s4 = Mat::Zero(n, d);
  out.lvl2.assign(ds.n(), PoolUsed::none);
  out.lvl3.assign(ds.n(), PoolUsed::none);
  out.lvl4.assign(ds.n(), PoolUsed::none);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    auto e = static_cast<Eigen::Index>(i);
    if (ds.x2_present(i)) {  // S*_2 conditions on (Y, X2, V)
      if (detail::level_mean(m_yx2v, ix.g_yx2v.gid[i], d, out.s2, e))
        out.lvl2[i] = PoolUsed::primary;
      else if (detail::level_mean(m_yv, ix.g_yv.gid[i], d, out.s2, e))
        out.lvl2[i] = PoolUsed::joint_yv;
      else if (detail::level_mean(m_y, ix.g_y.gid[i], d, out.s2, e))
        out.lvl2[i] = PoolUsed::y_only;
    }
    if (ds.x1_present(i)) {  // S*_3 conditions on (Y, X1, V)
      if (detail::level_mean(m_yx1v, ix.g_yx1v.gid[i], d, out.s3, e))
        out.lvl3[i] = PoolUsed::primary;
      else if (detail::level_mean(m_yv, ix.g_yv.gid[i], d, out.s3, e))
        out.lvl3[i] = PoolUsed::joint_yv;
      else if (detail::level_mean(m_y, ix.g_y.gid[i], d, out.s3, e))
        out.lvl3[i] = PoolUsed::y_only;
    }
    // S*_4 conditions on (Y, V), defined for every record
    if (detail::level_mean(m_yv, ix.g_yv.gid[i], d, out.s4, e))
      out.lvl4[i] = PoolUsed::primary;
    else if (detail::level_mean(m_y, ix.g_y.gid[i], d, out.s4, e))
      out.lvl4[i] = PoolUsed::y_only;
  }
  return out;
}

inline SStarMI2 sstar_mi2(const Dataset& ds, const DonorIndex& ix, const Vec& beta) {
  const int d = ds.d();
  Mat sc = detail::complete_score_rows(ds, beta);
  auto m_yv = detail::group_score_sums(ds, ix.g_yv, sc);
  auto m_y = detail::group_score_sums(ds, ix.g_y, sc);
  SStarMI2 out;
  out.s = Mat::Zero(static_cast<Eigen::Index>(ds.n()), d);
  out.lvl.assign(ds.n(), PoolUsed::none);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    auto e = static_cast<Eigen::Index>(i);
    if (detail::level_mean(m_yv, ix.g_yv.gid[i], d, out.s, e))
      out.lvl[i] = PoolUsed::primary;
    else if (detail::level_mean(m_y, ix.g_y.gid[i], d, out.s, e))
      out.lvl[i] = PoolUsed::y_only;
  }
  return out;
}

namespace detail {
[[noreturn]] inline void sstar_needed_error(std::size_t i, const char* which) {
  throw error("sstar_undefined",
              std::string("record ") + std::to_string(i + 1) + ": conditional score mean " +
                  which + " is required but no complete case shares its outcome value");
}
}  // namespace detail

// eta-hat per record, evaluated at the record's own missingness indicators:
//   (d1+d3) pi2/(pi1+pi3) + (d1+d2) pi3/(pi1+pi2) + d1 pi4/pi1.
// Terms with a zero numerator are skipped; an active term's denominator is
// positive because record i itself is counted in it.
inline Vec eta_hat(const Dataset& ds, const SelectionTable& table) {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(ds.n()));
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto p = table.probs_for(i);
    const Pattern pat = ds.pattern(i);
    double e = 0.0;
    auto add = [&](double num, double den) {
      if (num == 0.0) return;
      if (den <= 0.0)
        throw error("eta_undefined",
                    "record " + std::to_string(i + 1) + ": eta denominator is zero");
      e += num / den;
    };
    if (pat == Pattern::complete || pat == Pattern::x2_missing) add(p[1], p[0] + p[2]);
    if (pat == Pattern::complete || pat == Pattern::x1_missing) add(p[2], p[0] + p[1]);
    if (pat == Pattern::complete) add(p[3], p[0]);
    out[static_cast<Eigen::Index>(i)] = e;
  }
  return out;
}

// S~-hat rows: per-record average over v of the imputed-score contribution
// (equal to S_i for complete records).
inline Mat stilde_hat(const Dataset& ds, const CompletedSets& cs, const Vec& beta) {
  const int d = cs.d;
  Mat out = Mat::Zero(static_cast<Eigen::Index>(cs.n), d);
  Vec acc(d);
  for (std::size_t i = 0; i < cs.n; ++i) {
    const double yi = ds.y(i);
    auto e = static_cast<Eigen::Index>(i);
    if (cs.cnt[i] == 1) {
      Eigen::Map<const Vec> xv(cs.design_ptr(i, 0), d);
      out.row(e) = ((yi - inv_logit(xv.dot(beta))) * xv).transpose();
    } else {
      acc.setZero();
      for (int v = 0; v < cs.M; ++v) {
        Eigen::Map<const Vec> xv(cs.design_ptr(i, v), d);
        acc += (yi - inv_logit(xv.dot(beta))) * xv;
      }
      out.row(e) = (acc / static_cast<double>(cs.M)).transpose();
    }
  }
  return out;
}

// MI1 influence rows: Phi_i = d_i1 S_i / pi1 + sum_{k=2..4} S*_ki (d_ik - d_i1 pi_k/pi1).
// A zero coefficient skips its S* row, which is exactly the case where the
// row's conditioning block may be missing.
inline Mat phi_hat(const Dataset& ds, const SelectionTable& table, const SStarMI1& ss,
                   const Vec& beta) {
  const int d = ds.d();
  Mat sc = detail::complete_score_rows(ds, beta);
  Mat out = Mat::Zero(static_cast<Eigen::Index>(ds.n()), d);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto p = table.probs_for(i);
    const Pattern pat = ds.pattern(i);
    auto e = static_cast<Eigen::Index>(i);
    double c2 = 0.0, c3 = 0.0, c4 = 0.0;
    if (pat == Pattern::complete) {
      out.row(e) = sc.row(e) / p[0];
      c2 = -(p[1] / p[0]);
      c3 = -(p[2] / p[0]);
      c4 = -(p[3] / p[0]);
    } else if (pat == Pattern::x1_missing) {
      c2 = 1.0;
    } else if (pat == Pattern::x2_missing) {
      c3 = 1.0;
    } else {
      c4 = 1.0;
    }
    if (c2 != 0.0) {
      if (ss.lvl2[i] == PoolUsed::none) detail::sstar_needed_error(i, "S*_2");
      out.row(e) += c2 * ss.s2.row(e);
    }
    if (c3 != 0.0) {
      if (ss.lvl3[i] == PoolUsed::none) detail::sstar_needed_error(i, "S*_3");
      out.row(e) += c3 * ss.s3.row(e);
    }
    if (c4 != 0.0) {
      if (ss.lvl4[i] == PoolUsed::none) detail::sstar_needed_error(i, "S*_4");
      out.row(e) += c4 * ss.s4.row(e);
    }
  }
  return out;
}

// MI2 influence rows: Psi_i = d_i1 S_i + (1 - d_i1) S*_i + (S~_i - S*_i) eta_i.
inline Mat psi_hat(const Dataset& ds, const SelectionTable& table, const SStarMI2& ss,
                   const Mat& stilde, const Vec& beta) {
  const int d = ds.d();
  Mat sc = detail::complete_score_rows(ds, beta);
  Vec eta = eta_hat(ds, table);
  Mat out = Mat::Zero(static_cast<Eigen::Index>(ds.n()), d);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    auto e = static_cast<Eigen::Index>(i);
    if (ss.lvl[i] == PoolUsed::none) detail::sstar_needed_error(i, "S*");
    if (ds.pattern(i) == Pattern::complete)
      out.row(e) = sc.row(e);
    else
      out.row(e) = ss.s.row(e);
    out.row(e) += eta[e] * (stilde.row(e) - ss.s.row(e));
  }
  return out;
}

// Sandwich from influence rows: Ginv [(1/n) sum_i r_i r_i'] Ginv' / n.
inline Mat proposed_variance(const Mat& g, const Mat& infl) {
  const auto n = static_cast<double>(infl.rows());
  const int d = static_cast<int>(infl.cols());
  Mat meat = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < infl.rows(); ++i)
    meat.selfadjointView<Eigen::Lower>().rankUpdate(infl.row(i).transpose(), 1.0);
  meat = meat.selfadjointView<Eigen::Lower>();
  meat /= n;
  Mat ginv = invert_guarded(g, "G matrix");
  return ginv * meat * ginv.transpose() / n;
}

// ---------------------------------------------------------------------------
// Orchestration: impute, solve, and attach the requested variances.

struct MiFit {
  FitResult point;  // variance_method NONE; betas and solver report
  bool has_rubin = false;
  bool has_proposed = false;
  Mat rubin_cov, proposed_cov;
  Vec rubin_ase, proposed_ase;
};

inline Vec ase_from_cov(const Mat& cov) { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }

inline MiFit run_mi(const Dataset& ds, const DonorIndex& ix, const SelectionTable& table,
                    Method method, int M, RngStream rng, bool want_rubin, bool want_proposed) {
  MiFit r;
  CompletedSets cs = impute(ds, ix, method, M, rng);
  r.point = fit_mi(ds, cs);
  if (!r.point.report.converged) return r;
  const Vec& b = r.point.beta;
  if (want_rubin) {
    r.rubin_cov = rubin_variance(ds, cs, b);
    r.rubin_ase = ase_from_cov(r.rubin_cov);
    r.has_rubin = true;
  }
  if (want_proposed) {
    Mat g = g_matrix(ds, cs, b);
    Mat infl;
    if (method == Method::MI1) {
      infl = phi_hat(ds, table, sstar_mi1(ds, ix, b), b);
    } else {
      infl = psi_hat(ds, table, sstar_mi2(ds, ix, b), stilde_hat(ds, cs, b), b);
    }
    r.proposed_cov = proposed_variance(g, infl);
    r.proposed_ase = ase_from_cov(r.proposed_cov);
    r.has_proposed = true;
  }
  return r;
}

}  // namespace milogit
