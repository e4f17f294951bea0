#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "milogit/strata.hpp"

namespace milogit {

// Empirical selection probabilities per (Y, V) stratum: pi_j = n_j / n_total
// with n_j the pattern-j count among records sharing the stratum.  Counts are
// kept as integers (the canonical data); probabilities are exact small-integer
// ratios computed on demand.
class SelectionTable {
public:
  explicit SelectionTable(const Dataset& ds) : groups_(build_groups(ds, keypart::v)) {
    counts_.assign(groups_.n_groups, {0, 0, 0, 0});
    for (std::size_t i = 0; i < ds.n(); ++i)
      counts_[groups_.gid[i]][static_cast<int>(ds.pattern(i)) - 1]++;
    keys_.reserve(groups_.n_groups);
    for (std::int32_t g = 0; g < groups_.n_groups; ++g) {
      keys_.push_back(stratum_key(ds, groups_.rep[g]));
      by_key_.emplace(keys_.back(), g);
    }
  }

  std::int32_t n_strata() const { return groups_.n_groups; }
  std::int32_t gid(std::size_t record) const { return groups_.gid[record]; }
  const StratumKey& key(std::int32_t g) const { return keys_[g]; }

  const std::array<std::int64_t, 4>& counts(std::int32_t g) const { return counts_[g]; }

  std::int64_t total(std::int32_t g) const {
    const auto& c = counts_[g];
    return c[0] + c[1] + c[2] + c[3];
  }

  std::array<double, 4> probs(std::int32_t g) const {
    const auto& c = counts_[g];
    double t = static_cast<double>(total(g));
    return {c[0] / t, c[1] / t, c[2] / t, c[3] / t};
  }

  // Probabilities for the stratum a record belongs to.
  std::array<double, 4> probs_for(std::size_t record) const {
    return probs(groups_.gid[record]);
  }

  // Lookup by key; unseen keys are rejected.
  std::array<double, 4> lookup(const StratumKey& k) const {
    auto it = by_key_.find(k);
    if (it == by_key_.end()) {
      std::string desc = "y=" + std::to_string(k.y);
      for (const auto& t : k.v) desc += ",v=" + t;
      throw error("unknown_stratum", "no such stratum in selection table: " + desc);
    }
    return probs(it->second);
  }

private:
  GroupIndex groups_;
  std::vector<std::array<std::int64_t, 4>> counts_;
  std::vector<StratumKey> keys_;
  std::unordered_map<StratumKey, std::int32_t, StratumKeyHash> by_key_;
};

inline SelectionTable estimate_selection_probs(const Dataset& ds) {
  return SelectionTable(ds);
}

// Diagnostic dump, sorted by stratum key for stable output.
inline void write_selection_csv(std::ostream& out, const Dataset& ds,
                                const SelectionTable& t) {
  out << "y";
  for (int j = 0; j < ds.q(); ++j) out << ',' << ds.z_col(j).name();
  for (int j = 0; j < ds.w_count(); ++j) out << ',' << ds.w_col(j).name();
  out << ",n1,n2,n3,n4,n_total,pi1,pi2,pi3,pi4\n";
  std::vector<std::int32_t> order(t.n_strata());
  for (std::int32_t g = 0; g < t.n_strata(); ++g) order[g] = g;
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    const StratumKey &ka = t.key(a), &kb = t.key(b);
    if (ka.y != kb.y) return ka.y < kb.y;
    return ka.v < kb.v;
  });
  char buf[32];
  for (std::int32_t g : order) {
    const StratumKey& k = t.key(g);
    out << k.y;
    for (const auto& tok : k.v) out << ',' << tok;
    const auto& c = t.counts(g);
    out << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << c[3] << ',' << t.total(g);
    auto p = t.probs(g);
    for (double v : p) {
      std::snprintf(buf, sizeof(buf), "%.6f", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace milogit
