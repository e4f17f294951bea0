#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "milogit/simulation.hpp"

namespace milogit {

inline constexpr const char* kVersion = "0.1.0";

inline std::string fixed4(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Two-sided Wald p-value for z = est / ase.
inline double wald_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// Provenance header carried by every output file.
inline void header_comment(std::ostream& out, std::uint64_t seed,
                           const std::string& config_hash) {
  out << "# milogit " << kVersion << "\n";
  out << "# seed: " << seed << "\n";
  out << "# config: " << config_hash << "\n";
}

inline std::vector<std::string> coef_names(const Dataset& ds) {
  std::vector<std::string> names{"(intercept)"};
  for (int j = 0; j < ds.s(); ++j) names.push_back(ds.x1_col(j).name());
  for (int j = 0; j < ds.p2(); ++j) names.push_back(ds.x2_col(j).name());
  for (int j = 0; j < ds.q(); ++j) names.push_back(ds.z_col(j).name());
  return names;
}

namespace detail {

inline std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace detail

// One displayed estimator column of the fit report.  MI estimators appear
// once per variance method (same point estimates, different ASEs).
struct FitColumn {
  std::string label;
  bool ok = false;
  std::string err;  // shown when !ok
  Vec beta, ase;
};

// Per-coefficient blocks of est / ASE / p-value rows, estimators as columns.
inline void write_fit_table(std::ostream& out, const std::vector<std::string>& coefs,
                            const std::vector<FitColumn>& cols) {
  const std::size_t label_w = 14, num_w = 10;
  out << detail::pad_right("Parameter", label_w + 8);
  for (const auto& c : cols) out << detail::pad_left(c.label, num_w);
  out << '\n';
  for (std::size_t j = 0; j < coefs.size(); ++j) {
    const char* rows[3] = {"est", "ASE", "p-value"};
    for (int r = 0; r < 3; ++r) {
      out << detail::pad_right(r == 0 ? coefs[j] : "", label_w)
          << detail::pad_right(rows[r], 8);
      for (const auto& c : cols) {
        std::string cell = "NA";
        if (c.ok) {
          double est = c.beta[static_cast<Eigen::Index>(j)];
          double ase = c.ase[static_cast<Eigen::Index>(j)];
          if (r == 0)
            cell = fixed4(est);
          else if (r == 1)
            cell = fixed4(ase);
          else
            cell = ase > 0.0 ? fixed4(wald_p(est / ase)) : "NA";
        }
        out << detail::pad_left(cell, num_w);
      }
      out << '\n';
    }
  }
  for (const auto& c : cols)
    if (!c.ok) out << "note: " << c.label << " unavailable: " << c.err << '\n';
}

inline void write_fit_csv(std::ostream& out, const std::vector<std::string>& coefs,
                          const std::vector<FitColumn>& cols) {
  out << "estimator,coefficient,est,ase,z,p\n";
  for (const auto& c : cols) {
    for (std::size_t j = 0; j < coefs.size(); ++j) {
      out << c.label << ',' << coefs[j];
      if (!c.ok) {
        out << ",NA,NA,NA,NA\n";
        continue;
      }
      double est = c.beta[static_cast<Eigen::Index>(j)];
      double ase = c.ase[static_cast<Eigen::Index>(j)];
      char buf[128];
      if (ase > 0.0)
        std::snprintf(buf, sizeof buf, ",%.10g,%.10g,%.10g,%.10g", est, ase, est / ase,
                      wald_p(est / ase));
      else
        std::snprintf(buf, sizeof buf, ",%.10g,%.10g,NA,NA", est, ase);
      out << buf << '\n';
    }
  }
}

// Monte Carlo metrics, one block per coefficient: rows Bias/SD/ASE/MSE/CP,
// estimators as columns.
inline void write_metrics_table(std::ostream& out, const std::vector<std::string>& coefs,
                                const std::vector<VariantMetrics>& ms) {
  const std::size_t label_w = 12, num_w = 10;
  out << detail::pad_right("", label_w);
  for (const auto& m : ms) out << detail::pad_left(m.name, num_w);
  out << '\n';
  for (std::size_t j = 0; j < coefs.size(); ++j) {
    auto e = static_cast<Eigen::Index>(j);
    out << coefs[j] << '\n';
    struct Row {
      const char* name;
      Vec VariantMetrics::*field;
    };
    const Row rows[5] = {{"  Bias", &VariantMetrics::bias},
                         {"  SD", &VariantMetrics::sd},
                         {"  ASE", &VariantMetrics::ase},
                         {"  MSE", &VariantMetrics::mse},
                         {"  CP", &VariantMetrics::cp}};
    for (const Row& r : rows) {
      out << detail::pad_right(r.name, label_w);
      for (const auto& m : ms)
        out << detail::pad_left(m.used > 0 ? fixed4((m.*r.field)[e]) : "NA", num_w);
      out << '\n';
    }
  }
  out << detail::pad_right("dropped", label_w);
  for (const auto& m : ms) out << detail::pad_left(std::to_string(m.dropped), num_w);
  out << '\n';
}

inline void write_metrics_csv(std::ostream& out, const std::vector<std::string>& coefs,
                              const std::vector<VariantMetrics>& ms) {
  out << "estimator,coefficient,bias,sd,ase,mse,cp,used,dropped\n";
  char buf[160];
  for (const auto& m : ms) {
    for (std::size_t j = 0; j < coefs.size(); ++j) {
      auto e = static_cast<Eigen::Index>(j);
      if (m.used > 0) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g", m.bias[e], m.sd[e],
                      m.ase[e], m.mse[e], m.cp[e]);
        out << m.name << ',' << coefs[j] << ',' << buf << ',' << m.used << ',' << m.dropped
            << '\n';
      } else {
        out << m.name << ',' << coefs[j] << ",NA,NA,NA,NA,NA,0," << m.dropped << '\n';
      }
    }
  }
}

// Relative-efficiency table: mean-ASE ratios against the proposed-variance MI
// baselines.  Column Ar is ASE_A / ASE_MIrn; M12n is ASE_MI1n / ASE_MI2n.
struct ReTable {
  std::vector<std::string> coefs;
  std::vector<std::string> cols;
  Mat values;  // coef x col
};

inline ReTable build_re_table(const std::vector<std::string>& coefs,
                              const std::vector<VariantMetrics>& ms) {
  auto find = [&](const std::string& name) -> const VariantMetrics* {
    for (const auto& m : ms)
      if (m.name == name && m.used > 0) return &m;
    return nullptr;
  };
  const VariantMetrics* base[2] = {find("MI1n"), find("MI2n")};
  const std::pair<const char*, const char*> numerators[4] = {
      {"CC", "C"}, {"SIPW", "W"}, {"MI1", "M1"}, {"MI2", "M2"}};
  ReTable t;
  t.coefs = coefs;
  std::vector<Vec> cols;
  for (int r = 0; r < 2; ++r) {
    if (!base[r]) continue;
    if ((base[r]->ase.array() <= 0.0).any())
      throw error("zero_ase", std::string("baseline ") + (r == 0 ? "MI1n" : "MI2n") +
                                  " has a zero mean ASE");
    for (const auto& [est, short_name] : numerators) {
      const VariantMetrics* num = find(est);
      if (!num) continue;
      t.cols.push_back(std::string(short_name) + (r == 0 ? "1" : "2"));
      cols.push_back(relative_efficiency(*num, *base[r]));
    }
  }
  if (base[0] && base[1]) {
    t.cols.push_back("M12n");
    cols.push_back(relative_efficiency(*base[0], *base[1]));
  }
  t.values.resize(static_cast<Eigen::Index>(coefs.size()),
                  static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    t.values.col(static_cast<Eigen::Index>(c)) = cols[c];
  return t;
}

inline void write_re_table(std::ostream& out, const ReTable& t) {
  const std::size_t label_w = 12, num_w = 8;
  out << detail::pad_right("coef", label_w);
  for (const auto& c : t.cols) out << detail::pad_left(c, num_w);
  out << '\n';
  char buf[32];
  for (Eigen::Index j = 0; j < t.values.rows(); ++j) {
    out << detail::pad_right(t.coefs[static_cast<std::size_t>(j)], label_w);
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.3f", t.values(j, c));
      out << detail::pad_left(buf, num_w);
    }
    out << '\n';
  }
}

inline void write_re_csv(std::ostream& out, const ReTable& t) {
  out << "coefficient";
  for (const auto& c : t.cols) out << ',' << c;
  out << '\n';
  char buf[32];
  for (Eigen::Index j = 0; j < t.values.rows(); ++j) {
    out << t.coefs[static_cast<std::size_t>(j)];
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.10g", t.values(j, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace milogit
