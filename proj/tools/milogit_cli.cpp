// Batch front end: fit estimators on a CSV dataset, run simulation studies
// from a config file, or dump dataset diagnostics.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "milogit/milogit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNonConverged = 4;

void emit_error(const std::string& code, const std::string& message) {
  nlohmann::json j{{"error", code}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

std::string slurp(const std::string& path) { return milogit::read_file(path); }

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw milogit::error("io_error", "cannot write '" + path + "'");
  return f;
}

struct EstimatorSet {
  bool full = false, cc = true, sipw = true, mi1 = true, mi2 = true;
  bool full_auto = true;  // include FULL only when the data are complete
};

EstimatorSet parse_estimators(const std::string& csv) {
  EstimatorSet s;
  if (csv == "auto") return s;
  s = EstimatorSet{false, false, false, false, false, false};
  for (const auto& tok : milogit::KvConfig::split_list(csv)) {
    if (tok == "full")
      s.full = true;
    else if (tok == "cc")
      s.cc = true;
    else if (tok == "sipw")
      s.sipw = true;
    else if (tok == "mi1")
      s.mi1 = true;
    else if (tok == "mi2")
      s.mi2 = true;
    else
      throw milogit::error("bad_estimator", "unknown estimator '" + tok +
                                                "' (expected full, cc, sipw, mi1, mi2)");
  }
  if (!s.full && !s.cc && !s.sipw && !s.mi1 && !s.mi2)
    throw milogit::error("bad_estimator", "no estimators selected");
  return s;
}

struct VarianceSet {
  bool rubin = true, proposed = true;
};

VarianceSet parse_variance(const std::string& v) {
  if (v == "both") return {true, true};
  if (v == "rubin") return {true, false};
  if (v == "proposed") return {false, true};
  throw milogit::error("bad_variance",
                       "unknown variance '" + v + "' (expected rubin, proposed, both)");
}

// ---------------------------------------------------------------------------

int cmd_fit(const std::string& input, const std::string& schema_path,
            const std::string& out_prefix, std::uint64_t seed, const std::string& estimators,
            const std::string& variance, int m) {
  using namespace milogit;
  EstimatorSet which = parse_estimators(estimators);
  VarianceSet vs = parse_variance(variance);
  std::string schema_text = slurp(schema_path);
  Schema schema = schema_from_kv(parse_kv_text(schema_text, schema_path));
  Dataset ds = load_csv(input, schema);
  const std::string config_hash = fnv1a_hex(schema_text);
  const bool complete = ds.pattern_counts()[0] == ds.n();
  if (which.full_auto) which.full = complete;

  std::vector<FitColumn> cols;
  auto push = [&](const std::string& label, const FitResult& fr) {
    FitColumn c;
    c.label = label;
    c.ok = fr.report.converged;
    c.err = fr.report.reason;
    c.beta = fr.beta;
    c.ase = fr.ase;
    cols.push_back(std::move(c));
  };
  bool all_converged = true;
  if (which.full) {
    FitResult fr = fit_full_ml(ds);
    push("FULL", fr);
    all_converged = all_converged && fr.report.converged;
  }
  if (which.cc) {
    FitResult fr = fit_cc(ds);
    push("CC", fr);
    all_converged = all_converged && fr.report.converged;
  }
  if (which.sipw || which.mi1 || which.mi2) {
    SelectionTable table(ds);
    if (which.sipw) {
      FitResult fr = fit_sipw(ds, table);
      push("SIPW", fr);
      all_converged = all_converged && fr.report.converged;
    }
    if (which.mi1 || which.mi2) {
      DonorIndex ix = build_donor_index(ds);
      RngStream root(seed);
      std::vector<FitColumn> rubin_cols, prop_cols;
      auto run = [&](Method method, std::uint64_t tag, const char* rub_label,
                     const char* prop_label) {
        MiFit fit = run_mi(ds, ix, table, method, m, root.substream(tag), vs.rubin,
                           vs.proposed);
        all_converged = all_converged && fit.point.report.converged;
        FitColumn c;
        c.ok = fit.point.report.converged;
        c.err = fit.point.report.reason;
        c.beta = fit.point.beta;
        if (vs.rubin) {
          c.label = rub_label;
          c.ase = fit.rubin_ase;
          rubin_cols.push_back(c);
        }
        if (vs.proposed) {
          c.label = prop_label;
          c.ase = fit.proposed_ase;
          prop_cols.push_back(c);
        }
      };
      if (which.mi1) run(Method::MI1, rng_tag::impute_mi1, "MI1", "MI1n");
      if (which.mi2) run(Method::MI2, rng_tag::impute_mi2, "MI2", "MI2n");
      for (auto& c : rubin_cols) cols.push_back(std::move(c));
      for (auto& c : prop_cols) cols.push_back(std::move(c));
    }
  }

  std::vector<std::string> coefs = coef_names(ds);
  std::ostringstream text;
  header_comment(text, seed, config_hash);
  write_fit_table(text, coefs, cols);
  std::cout << text.str();
  if (!out_prefix.empty()) {
    auto f = open_out(out_prefix + "_fit.txt");
    f << text.str();
    auto c = open_out(out_prefix + "_fit.csv");
    header_comment(c, seed, config_hash);
    write_fit_csv(c, coefs, cols);
  }
  if (!all_converged) {
    emit_error("non_convergence", "one or more requested fits did not converge");
    return kExitNonConverged;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_prefix,
                 std::uint64_t seed, int workers, const std::string& estimators,
                 const std::string& variance, int m_override) {
  using namespace milogit;
  std::string config_text = slurp(config_path);
  StudyConfig cfg = load_study_config(parse_kv_text(config_text, config_path));
  if (m_override > 0) cfg.m = m_override;
  const std::string config_hash = fnv1a_hex(config_text);

  EstimatorSet which = parse_estimators(estimators);
  VarianceSet vs = parse_variance(variance);
  SimOptions opt;
  opt.workers = workers;
  opt.run_full = which.full_auto ? true : which.full;
  opt.run_cc = which.cc;
  opt.run_sipw = which.sipw;
  opt.run_mi1 = which.mi1;
  opt.run_mi2 = which.mi2;
  opt.rubin = vs.rubin;
  opt.proposed = vs.proposed;

  std::vector<RepResult> reps = run_replications(cfg, seed, opt);
  std::vector<VariantMetrics> ms = summarize(cfg, reps, opt);
  std::vector<std::string> coefs{"beta_0", "beta_1", "beta_2", "beta_3"};

  bool high_drop = false;
  for (const auto& m : ms)
    if (m.dropped * 10 > cfg.reps) high_drop = true;

  std::ostringstream text;
  header_comment(text, seed, config_hash);
  text << "# study: " << cfg.name << "  n: " << cfg.n << "  reps: " << cfg.reps
       << "  M: " << cfg.m << "  workers: " << workers << "\n";
  if (high_drop) text << "# WARNING: more than 10% of replications dropped\n";
  write_metrics_table(text, coefs, ms);
  std::cout << text.str();

  std::ostringstream re_text;
  bool have_re = false;
  try {
    ReTable re = build_re_table(coefs, ms);
    if (re.values.cols() > 0) {
      header_comment(re_text, seed, config_hash);
      write_re_table(re_text, re);
      std::cout << "\nRelative efficiency (mean-ASE ratios)\n" << re_text.str();
      have_re = true;
    }
  } catch (const error& e) {
    emit_error(e.code(), e.what());
  }

  if (!out_prefix.empty()) {
    {
      auto f = open_out(out_prefix + "_metrics.txt");
      f << text.str();
    }
    {
      auto f = open_out(out_prefix + "_metrics.csv");
      header_comment(f, seed, config_hash);
      if (high_drop) f << "# WARNING: more than 10% of replications dropped\n";
      write_metrics_csv(f, coefs, ms);
    }
    if (have_re) {
      auto f = open_out(out_prefix + "_re.txt");
      f << re_text.str();
      auto c = open_out(out_prefix + "_re.csv");
      header_comment(c, seed, config_hash);
      ReTable re = build_re_table(coefs, ms);
      write_re_csv(c, re);
    }
  }
  if (high_drop) emit_error("high_drop_rate", "more than 10% of replications dropped");
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_diagnose(const std::string& input, const std::string& schema_path,
                 const std::string& out_prefix, std::uint64_t seed) {
  using namespace milogit;
  std::string schema_text = slurp(schema_path);
  Schema schema = schema_from_kv(parse_kv_text(schema_text, schema_path));
  Dataset ds = load_csv(input, schema);
  const std::string config_hash = fnv1a_hex(schema_text);

  std::ostringstream text;
  header_comment(text, seed, config_hash);
  auto counts = ds.pattern_counts();
  const double n = static_cast<double>(ds.n());
  text << "records: " << ds.n() << "\n";
  text << "pattern counts (complete, x1 missing, x2 missing, both missing): " << counts[0]
       << " " << counts[1] << " " << counts[2] << " " << counts[3] << "\n";
  text << "pattern fractions: " << fixed4(counts[0] / n) << " " << fixed4(counts[1] / n)
       << " " << fixed4(counts[2] / n) << " " << fixed4(counts[3] / n) << "\n";

  SelectionTable table(ds);
  text << "strata: " << table.n_strata() << "\n";

  DonorIndex ix = build_donor_index(ds);
  auto fallback_lines = [&](Method m) {
    PoolProvenance pr = pool_provenance(ds, ix, m);
    std::size_t fell = 0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      for (const auto* v : {&pr.x1, &pr.x2}) {
        PoolUsed u = (*v)[i];
        if (u == PoolUsed::none || u == PoolUsed::primary) continue;
        text << "  record " << (i + 1) << " " << (v == &pr.x1 ? "x1" : "x2") << " -> "
             << (u == PoolUsed::joint_yv ? "(Y,V) pool" : "Y-only pool") << "\n";
        fell++;
        break;  // joint imputations report once per record
      }
    }
    if (fell == 0) text << "  none\n";
  };
  text << "MI1 fallback records:\n";
  fallback_lines(Method::MI1);
  text << "MI2 fallback records:\n";
  fallback_lines(Method::MI2);
  std::cout << text.str();

  std::ostringstream sel;
  header_comment(sel, seed, config_hash);
  write_selection_csv(sel, ds, table);
  if (!out_prefix.empty()) {
    auto f = open_out(out_prefix + "_diagnose.txt");
    f << text.str();
    auto c = open_out(out_prefix + "_selection.csv");
    c << sel.str();
  } else {
    std::cout << "\nselection table:\n" << sel.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"logistic regression with two missing-at-random covariate blocks"};
  app.require_subcommand(1);

  std::string input, schema, config, out;
  std::uint64_t seed = 1;
  std::string estimators = "auto";
  std::string variance = "both";
  int imputations = 15;
  int workers = 1;

  auto* fit = app.add_subcommand("fit", "fit estimators on a CSV dataset");
  fit->add_option("--input", input, "CSV data file")->required();
  fit->add_option("--schema", schema, "schema key-value file")->required();
  fit->add_option("--out", out, "output path prefix");
  fit->add_option("--seed", seed, "RNG seed");
  fit->add_option("--estimators", estimators, "comma list of full,cc,sipw,mi1,mi2");
  fit->add_option("--variance", variance, "rubin, proposed, or both");
  fit->add_option("--imputations", imputations, "imputation count M");

  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo study from a config");
  int sim_m = 0;  // 0 keeps the config's M
  sim->add_option("--config", config, "study config file")->required();
  sim->add_option("--out", out, "output path prefix");
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--workers", workers, "worker thread count");
  sim->add_option("--estimators", estimators, "comma list of full,cc,sipw,mi1,mi2");
  sim->add_option("--variance", variance, "rubin, proposed, or both");
  sim->add_option("--imputations", sim_m, "override the config's M");

  auto* diag = app.add_subcommand("diagnose", "dump selection/stratum diagnostics");
  diag->add_option("--input", input, "CSV data file")->required();
  diag->add_option("--schema", schema, "schema key-value file")->required();
  diag->add_option("--out", out, "output path prefix");
  diag->add_option("--seed", seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed())
      return cmd_fit(input, schema, out, seed, estimators, variance, imputations);
    if (sim->parsed())
      return cmd_simulate(config, out, seed, workers, estimators, variance, sim_m);
    return cmd_diagnose(input, schema, out, seed);
  } catch (const milogit::error& e) {
    emit_error(e.code(), e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    emit_error("internal_error", e.what());
    return kExitValidation;
  }
}
