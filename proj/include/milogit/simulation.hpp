#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "milogit/config.hpp"
#include "milogit/variance.hpp"

namespace milogit {

// Two-sided 95% normal quantile used for coverage and interval reporting.
inline constexpr double kZ975 = 1.959964;

// One discrete covariate: literal level tokens with their numeric values and
// sampling probabilities.
struct DiscreteSpec {
  std::vector<std::string> tokens;
  std::vector<double> values;
  std::vector<double> probs;
};

// Binary surrogate W for a covariate X: either the deterministic indicator
// 1{X > 0} or a Bernoulli draw whose success probability depends on the level
// of X.
struct SurrogateSpec {
  bool threshold = true;
  std::vector<double> p1;  // bern mode: P(W=1 | X = level j), by level index
};

struct StudyConfig {
  std::string name;
  std::size_t n = 0;
  int reps = 0;
  int m = 15;
  Vec beta;  // (intercept, x1, x2, z)
  DiscreteSpec x1, x2;
  double z_prob = 0.5;
  SurrogateSpec w1, w2;
  std::array<double, 3> alpha{};
  std::array<double, 4> gamma{};  // coefficients of (y, w1, w2, z)
};

namespace detail {

inline DiscreteSpec discrete_spec(const KvConfig& kv, const std::string& levels_key,
                                  const std::string& probs_key) {
  DiscreteSpec s;
  s.tokens = kv.list(levels_key);
  s.values = kv.num_list(levels_key);
  s.probs = kv.num_list(probs_key);
  if (s.tokens.size() < 2)
    throw error("bad_config", levels_key + ": need at least two levels");
  if (s.probs.size() != s.tokens.size())
    throw error("bad_config", probs_key + ": length differs from " + levels_key);
  double sum = 0.0;
  for (double p : s.probs) {
    if (p < 0.0) throw error("bad_config", probs_key + ": negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw error("bad_config", probs_key + ": probabilities sum to " + std::to_string(sum));
  return s;
}

inline SurrogateSpec surrogate_spec(const KvConfig& kv, const std::string& key,
                                    std::size_t n_levels) {
  SurrogateSpec s;
  std::string mode = kv.get_or(key, "threshold");
  if (mode == "threshold") return s;
  if (mode != "bern")
    throw error("bad_config", key + ": mode '" + mode + "' is not threshold or bern");
  s.threshold = false;
  s.p1 = kv.num_list(key + "_probs");
  if (s.p1.size() != n_levels)
    throw error("bad_config", key + "_probs: need one probability per covariate level");
  for (double p : s.p1)
    if (p < 0.0 || p > 1.0) throw error("bad_config", key + "_probs: value outside [0,1]");
  return s;
}

}  // namespace detail

inline StudyConfig load_study_config(const KvConfig& kv) {
  StudyConfig c;
  c.name = kv.get_or("name", "study");
  double n = kv.num("n");
  if (n < 1 || n != std::floor(n)) throw error("bad_config", "n must be a positive integer");
  c.n = static_cast<std::size_t>(n);
  c.reps = static_cast<int>(kv.integer("reps"));
  if (c.reps < 1) throw error("bad_config", "reps must be positive");
  c.m = static_cast<int>(kv.integer_or("m", 15));
  if (c.m < 2) throw error("bad_config", "m must be at least 2");
  auto beta = kv.num_list("beta");
  if (beta.size() != 4)
    throw error("bad_config", "beta: need 4 values (intercept, x1, x2, z)");
  c.beta = Eigen::Map<const Vec>(beta.data(), 4);
  c.x1 = detail::discrete_spec(kv, "x1_levels", "x1_probs");
  c.x2 = detail::discrete_spec(kv, "x2_levels", "x2_probs");
  c.z_prob = kv.num("z_prob");
  if (c.z_prob < 0.0 || c.z_prob > 1.0) throw error("bad_config", "z_prob outside [0,1]");
  c.w1 = detail::surrogate_spec(kv, "w1", c.x1.tokens.size());
  c.w2 = detail::surrogate_spec(kv, "w2", c.x2.tokens.size());
  auto alpha = kv.num_list("alpha");
  if (alpha.size() != 3) throw error("bad_config", "alpha: need 3 values");
  std::copy(alpha.begin(), alpha.end(), c.alpha.begin());
  auto gamma = kv.num_list("gamma");
  if (gamma.size() != 4) throw error("bad_config", "gamma: need 4 values (y, w1, w2, z)");
  std::copy(gamma.begin(), gamma.end(), c.gamma.begin());
  return c;
}

// P(delta = j | y, w1, w2, z) for j=1..4 under the multinomial logit
// ln(p_j / p_4) = alpha_j + g1 y + g2 w1 + g3 w2 + g4 z.
inline std::array<double, 4> pattern_probs(const StudyConfig& cfg, int y, int w1, int w2,
                                           int z) {
  std::array<double, 4> lin;
  const double shift =
      cfg.gamma[0] * y + cfg.gamma[1] * w1 + cfg.gamma[2] * w2 + cfg.gamma[3] * z;
  for (int j = 0; j < 3; ++j) lin[j] = cfg.alpha[j] + shift;
  lin[3] = 0.0;
  double mx = *std::max_element(lin.begin(), lin.end());
  double sum = 0.0;
  std::array<double, 4> p;
  for (int j = 0; j < 4; ++j) {
    p[j] = std::exp(lin[j] - mx);
    sum += p[j];
  }
  for (int j = 0; j < 4; ++j) p[j] /= sum;
  return p;
}

// One generated replication: the pre-masking complete dataset (benchmark ML
// fit) and the same records with blocks masked by the drawn patterns.
struct SimData {
  Dataset complete;
  Dataset masked;
};

// Covariates, outcome, and patterns for one replication of size n.  Draw
// order per record: x1, x2, z, [w1], [w2], y from the covariate stream, then
// the pattern from the missingness stream.  Threshold surrogates consume no
// draw.
inline SimData gen_dataset(const StudyConfig& cfg, std::size_t n, const RngStream& rep_rng) {
  RngStream cov = rep_rng.substream(rng_tag::covariates);
  RngStream mis = rep_rng.substream(rng_tag::missingness);
  const std::vector<std::string> names1{"x1"}, names2{"x2"}, namesz{"z"}, namesw{"w1", "w2"};
  DatasetBuilder full("y", names1, names2, namesz, namesw);
  DatasetBuilder masked("y", names1, names2, namesz, namesw);
  const std::string zero = "0", one = "1";
  for (std::size_t i = 0; i < n; ++i) {
    int i1 = cov.discrete(cfg.x1.probs.data(), static_cast<int>(cfg.x1.probs.size()));
    int i2 = cov.discrete(cfg.x2.probs.data(), static_cast<int>(cfg.x2.probs.size()));
    int z = cov.bernoulli(cfg.z_prob) ? 1 : 0;
    int w1 = cfg.w1.threshold ? (cfg.x1.values[i1] > 0.0 ? 1 : 0)
                              : (cov.bernoulli(cfg.w1.p1[i1]) ? 1 : 0);
    int w2 = cfg.w2.threshold ? (cfg.x2.values[i2] > 0.0 ? 1 : 0)
                              : (cov.bernoulli(cfg.w2.p1[i2]) ? 1 : 0);
    double eta = cfg.beta[0] + cfg.beta[1] * cfg.x1.values[i1] +
                 cfg.beta[2] * cfg.x2.values[i2] + cfg.beta[3] * z;
    int y = cov.bernoulli(inv_logit(eta)) ? 1 : 0;
    auto pp = pattern_probs(cfg, y, w1, w2, z);
    int pat = mis.discrete(pp.data(), 4) + 1;  // 1..4

    const std::string& t1 = cfg.x1.tokens[i1];
    const std::string& t2 = cfg.x2.tokens[i2];
    const std::string& ty = y ? one : zero;
    std::vector<std::string> zs{z ? one : zero};
    std::vector<std::string> ws{w1 ? one : zero, w2 ? one : zero};
    full.add_record(ty, {t1}, {t2}, zs, ws);
    bool keep1 = pat == 1 || pat == 3;
    bool keep2 = pat == 1 || pat == 2;
    masked.add_record(ty, {keep1 ? std::optional<std::string>(t1) : std::nullopt},
                      {keep2 ? std::optional<std::string>(t2) : std::nullopt}, zs, ws);
  }
  return {full.build(), masked.build()};
}

// ---------------------------------------------------------------------------
// Replication harness.

struct SimOptions {
  int workers = 1;
  bool run_full = true, run_cc = true, run_sipw = true, run_mi1 = true, run_mi2 = true;
  bool rubin = true, proposed = true;
};

struct EstRecord {
  bool ok = false;
  Vec beta, ase;
  std::string err;
};

// mi1/mi1n (and mi2/mi2n) share the point estimate; they differ in the
// variance estimator behind `ase` (Rubin type vs proposed sandwich).
struct RepResult {
  EstRecord full, cc, sipw, mi1, mi1n, mi2, mi2n;
};

namespace detail {

template <typename F>
inline void guarded_fit(EstRecord& rec, F&& f) {
  try {
    f();
  } catch (const error& e) {
    rec.ok = false;
    rec.err = e.what();
  }
}

inline void fill_point(EstRecord& rec, const FitResult& fr) {
  if (!fr.report.converged) {
    rec.ok = false;
    rec.err = fr.report.reason;
    return;
  }
  rec.ok = true;
  rec.beta = fr.beta;
  rec.ase = fr.ase;
}

}  // namespace detail

inline RepResult run_one_rep(const StudyConfig& cfg, const RngStream& root, int rep,
                             const SimOptions& opt) {
  RepResult r;
  RngStream rep_rng = root.substream(rng_tag::replication, static_cast<std::uint64_t>(rep));
  try {
    SimData sd = gen_dataset(cfg, cfg.n, rep_rng);
    if (opt.run_full)
      detail::guarded_fit(r.full,
                          [&] { detail::fill_point(r.full, fit_full_ml(sd.complete)); });
    if (opt.run_cc)
      detail::guarded_fit(r.cc, [&] { detail::fill_point(r.cc, fit_cc(sd.masked)); });
    if (!opt.run_sipw && !opt.run_mi1 && !opt.run_mi2) return r;

    SelectionTable table(sd.masked);
    if (opt.run_sipw)
      detail::guarded_fit(r.sipw,
                          [&] { detail::fill_point(r.sipw, fit_sipw(sd.masked, table)); });
    if (!opt.run_mi1 && !opt.run_mi2) return r;

    DonorIndex ix = build_donor_index(sd.masked);
    auto run_method = [&](Method m, EstRecord& rub, EstRecord& prop, std::uint64_t tag) {
      detail::guarded_fit(rub, [&] {
        MiFit fit = run_mi(sd.masked, ix, table, m, cfg.m, rep_rng.substream(tag), opt.rubin,
                           opt.proposed);
        if (!fit.point.report.converged) {
          rub.err = prop.err = fit.point.report.reason;
          return;
        }
        if (fit.has_rubin) {
          rub.ok = true;
          rub.beta = fit.point.beta;
          rub.ase = fit.rubin_ase;
        }
        if (fit.has_proposed) {
          prop.ok = true;
          prop.beta = fit.point.beta;
          prop.ase = fit.proposed_ase;
        }
      });
      if (!rub.err.empty() && prop.err.empty() && !prop.ok) prop.err = rub.err;
    };
    if (opt.run_mi1) run_method(Method::MI1, r.mi1, r.mi1n, rng_tag::impute_mi1);
    if (opt.run_mi2) run_method(Method::MI2, r.mi2, r.mi2n, rng_tag::impute_mi2);
  } catch (const error& e) {
    // generation failure: mark every requested estimator with the cause
    for (EstRecord* rec : {&r.full, &r.cc, &r.sipw, &r.mi1, &r.mi1n, &r.mi2, &r.mi2n})
      if (!rec->ok && rec->err.empty()) rec->err = e.what();
  }
  return r;
}

// Runs all replications and returns one result slot per replication.  Slots
// are filled independently and in a fixed per-replication random stream, so
// the output is identical for any worker count.
inline std::vector<RepResult> run_replications(const StudyConfig& cfg, std::uint64_t seed,
                                               const SimOptions& opt) {
  std::vector<RepResult> slots(static_cast<std::size_t>(cfg.reps));
  RngStream root(seed);
  int workers = std::max(1, opt.workers);
  if (workers == 1) {
    for (int rep = 0; rep < cfg.reps; ++rep)
      slots[static_cast<std::size_t>(rep)] = run_one_rep(cfg, root, rep, opt);
    return slots;
  }
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      int rep = next.fetch_add(1);
      if (rep >= cfg.reps) return;
      slots[static_cast<std::size_t>(rep)] = run_one_rep(cfg, root, rep, opt);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  return slots;
}

// ---------------------------------------------------------------------------
// Monte Carlo summaries.

struct VariantMetrics {
  std::string name;
  int used = 0;     // converged replications entering the summaries
  int dropped = 0;  // failed or non-converged replications
  Vec bias, sd, ase, mse, cp;  // per coefficient; ase is the mean ASE
};

inline VariantMetrics summarize_variant(const std::string& name, const Vec& beta_true,
                                        const std::vector<const EstRecord*>& recs) {
  const int d = static_cast<int>(beta_true.size());
  VariantMetrics m;
  m.name = name;
  m.bias = Vec::Zero(d);
  m.sd = Vec::Zero(d);
  m.ase = Vec::Zero(d);
  m.mse = Vec::Zero(d);
  m.cp = Vec::Zero(d);
  Vec mean = Vec::Zero(d);
  for (const EstRecord* r : recs) {
    if (!r->ok) {
      m.dropped++;
      continue;
    }
    m.used++;
    mean += r->beta;
    m.ase += r->ase;
    for (int j = 0; j < d; ++j)
      if (std::abs(r->beta[j] - beta_true[j]) <= kZ975 * r->ase[j]) m.cp[j] += 1.0;
  }
  if (m.used == 0) return m;
  mean /= m.used;
  m.ase /= m.used;
  m.cp /= m.used;
  m.bias = mean - beta_true;
  if (m.used > 1) {
    for (const EstRecord* r : recs)
      if (r->ok) m.sd += (r->beta - mean).cwiseAbs2();
    m.sd = (m.sd / (m.used - 1)).cwiseSqrt();
  }
  m.mse = m.bias.cwiseAbs2() + m.sd.cwiseAbs2();
  return m;
}

// Summaries in fixed estimator order; disabled estimators are omitted.
inline std::vector<VariantMetrics> summarize(const StudyConfig& cfg,
                                             const std::vector<RepResult>& reps,
                                             const SimOptions& opt) {
  auto collect = [&](EstRecord RepResult::*member) {
    std::vector<const EstRecord*> v;
    v.reserve(reps.size());
    for (const RepResult& r : reps) v.push_back(&(r.*member));
    return v;
  };
  std::vector<VariantMetrics> out;
  if (opt.run_full)
    out.push_back(summarize_variant("FULL", cfg.beta, collect(&RepResult::full)));
  if (opt.run_cc) out.push_back(summarize_variant("CC", cfg.beta, collect(&RepResult::cc)));
  if (opt.run_sipw)
    out.push_back(summarize_variant("SIPW", cfg.beta, collect(&RepResult::sipw)));
  if (opt.run_mi1 && opt.rubin)
    out.push_back(summarize_variant("MI1", cfg.beta, collect(&RepResult::mi1)));
  if (opt.run_mi2 && opt.rubin)
    out.push_back(summarize_variant("MI2", cfg.beta, collect(&RepResult::mi2)));
  if (opt.run_mi1 && opt.proposed)
    out.push_back(summarize_variant("MI1n", cfg.beta, collect(&RepResult::mi1n)));
  if (opt.run_mi2 && opt.proposed)
    out.push_back(summarize_variant("MI2n", cfg.beta, collect(&RepResult::mi2n)));
  return out;
}

// Elementwise mean-ASE ratio of `num` to the baseline `den`.
inline Vec relative_efficiency(const VariantMetrics& num, const VariantMetrics& den) {
  return num.ase.cwiseQuotient(den.ase);
}

}  // namespace milogit
