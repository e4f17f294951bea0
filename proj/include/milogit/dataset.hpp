#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "milogit/error.hpp"

namespace milogit {

// Missingness pattern of the two covariate blocks.
enum class Pattern : std::uint8_t {
  complete = 1,      // both blocks observed
  x1_missing = 2,    // X1 missing, X2 observed
  x2_missing = 3,    // X1 observed, X2 missing
  both_missing = 4,  // both missing
};

inline Pattern derive_pattern(bool x1_present, bool x2_present) {
  if (x1_present) return x2_present ? Pattern::complete : Pattern::x2_missing;
  return x2_present ? Pattern::x1_missing : Pattern::both_missing;
}

// One covariate column.  Levels are canonical tokens (exact strings, compared
// literally); each distinct token is interned to a small integer code, and a
// numeric value is parsed per level only for columns that feed the design
// vector.  Missing cells carry code -1.
class Column {
public:
  Column(std::string name, bool numeric) : name_(std::move(name)), numeric_(numeric) {}

  const std::string& name() const { return name_; }

  std::int32_t intern(const std::string& token) {
    auto it = ids_.find(token);
    if (it != ids_.end()) return it->second;
    auto id = static_cast<std::int32_t>(tokens_.size());
    double val = std::numeric_limits<double>::quiet_NaN();
    if (numeric_) {
      const char* s = token.c_str();
      char* end = nullptr;
      val = std::strtod(s, &end);
      if (end == s || *end != '\0' || !std::isfinite(val))
        throw error("non_numeric_level",
                    "column '" + name_ + "': level token '" + token +
                        "' is not a finite number");
    }
    tokens_.push_back(token);
    values_.push_back(val);
    ids_.emplace(tokens_.back(), id);
    return id;
  }

  void push(std::int32_t code) { code_.push_back(code); }

  std::int32_t code(std::size_t i) const { return code_[i]; }
  const std::string& token_of(std::int32_t code) const { return tokens_[code]; }
  double value_of(std::int32_t code) const { return values_[code]; }
  std::size_t n_levels() const { return tokens_.size(); }
  bool numeric() const { return numeric_; }

private:
  std::string name_;
  bool numeric_;
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::int32_t> ids_;
  std::vector<std::int32_t> code_;
};

class DatasetBuilder;

// Immutable after construction; shareable across threads.
class Dataset {
public:
  std::size_t n() const { return y_.size(); }
  int s() const { return static_cast<int>(x1_.size()); }    // |X1|
  int p2() const { return static_cast<int>(x2_.size()); }   // |X2|
  int q() const { return static_cast<int>(z_.size()); }     // |Z|
  int w_count() const { return static_cast<int>(w_.size()); }
  int d() const { return 1 + s() + p2() + q(); }             // design length

  int y(std::size_t i) const { return y_[i]; }
  Pattern pattern(std::size_t i) const { return pat_[i]; }
  bool x1_present(std::size_t i) const {
    return pat_[i] == Pattern::complete || pat_[i] == Pattern::x2_missing;
  }
  bool x2_present(std::size_t i) const {
    return pat_[i] == Pattern::complete || pat_[i] == Pattern::x1_missing;
  }

  const Column& x1_col(int j) const { return x1_[j]; }
  const Column& x2_col(int j) const { return x2_[j]; }
  const Column& z_col(int j) const { return z_[j]; }
  const Column& w_col(int j) const { return w_[j]; }
  const std::string& outcome_name() const { return outcome_name_; }

  std::array<std::size_t, 4> pattern_counts() const {
    std::array<std::size_t, 4> c{0, 0, 0, 0};
    for (Pattern p : pat_) c[static_cast<int>(p) - 1]++;
    return c;
  }

  // Design vector (1, X1, X2, Z) for a complete record.
  void design(std::size_t i, double* out) const {
    if (pat_[i] != Pattern::complete)
      throw error("incomplete_record",
                  "design vector requested for record " + std::to_string(i + 1) +
                      " with missing covariates");
    design_with_donors(i, -1, -1, out);
  }

  // Design vector with the X1 / X2 block taken from a donor record
  // (donor < 0 means use record i's own block).
  void design_with_donors(std::size_t i, std::ptrdiff_t x1_donor,
                          std::ptrdiff_t x2_donor, double* out) const {
    int k = 0;
    out[k++] = 1.0;
    std::size_t a = x1_donor < 0 ? i : static_cast<std::size_t>(x1_donor);
    for (const Column& c : x1_) out[k++] = c.value_of(c.code(a));
    std::size_t b = x2_donor < 0 ? i : static_cast<std::size_t>(x2_donor);
    for (const Column& c : x2_) out[k++] = c.value_of(c.code(b));
    for (const Column& c : z_) out[k++] = c.value_of(c.code(i));
  }

private:
  friend class DatasetBuilder;
  Dataset() = default;

  std::string outcome_name_ = "y";
  std::vector<std::uint8_t> y_;
  std::vector<Pattern> pat_;
  std::vector<Column> x1_, x2_, z_, w_;
};

// Stratum key: determined solely by (y, z, w).  Tokens compare literally.
struct StratumKey {
  int y = 0;
  std::vector<std::string> v;  // z tokens then w tokens
  bool operator==(const StratumKey& o) const { return y == o.y && v == o.v; }
};

struct StratumKeyHash {
  std::size_t operator()(const StratumKey& k) const {
    // multiply right after folding y in, so the y bit lands nowhere near the
    // low bits of the first token's characters
    std::size_t h = (0xcbf29ce484222325ULL ^ static_cast<std::size_t>(k.y)) * 0x100000001b3ULL;
    for (const std::string& t : k.v) {
      for (char c : t) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
      h = (h ^ 0x1f) * 0x100000001b3ULL;
    }
    return h;
  }
};

inline StratumKey stratum_key(const Dataset& ds, std::size_t i) {
  StratumKey k;
  k.y = ds.y(i);
  k.v.reserve(ds.q() + ds.w_count());
  for (int j = 0; j < ds.q(); ++j) k.v.push_back(ds.z_col(j).token_of(ds.z_col(j).code(i)));
  for (int j = 0; j < ds.w_count(); ++j) k.v.push_back(ds.w_col(j).token_of(ds.w_col(j).code(i)));
  return k;
}

class DatasetBuilder {
public:
  DatasetBuilder(std::string outcome_name, std::vector<std::string> x1_names,
                 std::vector<std::string> x2_names, std::vector<std::string> z_names,
                 std::vector<std::string> w_names) {
    if (x1_names.empty() || x2_names.empty())
      throw error("bad_schema", "both covariate blocks x1 and x2 need at least one column");
    ds_.outcome_name_ = std::move(outcome_name);
    for (auto& nm : x1_names) ds_.x1_.emplace_back(std::move(nm), true);
    for (auto& nm : x2_names) ds_.x2_.emplace_back(std::move(nm), true);
    for (auto& nm : z_names) ds_.z_.emplace_back(std::move(nm), true);
    for (auto& nm : w_names) ds_.w_.emplace_back(std::move(nm), false);
  }

  // Empty optional = missing cell.  Only x1/x2 cells may be missing, and only
  // as whole blocks.
  void add_record(const std::string& y_token,
                  const std::vector<std::optional<std::string>>& x1,
                  const std::vector<std::optional<std::string>>& x2,
                  const std::vector<std::string>& z,
                  const std::vector<std::string>& w) {
    std::size_t row = ds_.n() + 1;
    if (y_token != "0" && y_token != "1")
      throw error("bad_outcome", "record " + std::to_string(row) + ": outcome '" +
                                     y_token + "' is not 0 or 1");
    if (x1.size() != ds_.x1_.size() || x2.size() != ds_.x2_.size() ||
        z.size() != ds_.z_.size() || w.size() != ds_.w_.size())
      throw error("bad_record", "record " + std::to_string(row) + ": wrong field counts");

    bool x1_present = check_block(x1, "x1", row);
    bool x2_present = check_block(x2, "x2", row);

    ds_.y_.push_back(y_token == "1" ? 1 : 0);
    ds_.pat_.push_back(derive_pattern(x1_present, x2_present));
    for (std::size_t j = 0; j < x1.size(); ++j)
      ds_.x1_[j].push(x1_present ? ds_.x1_[j].intern(*x1[j]) : -1);
    for (std::size_t j = 0; j < x2.size(); ++j)
      ds_.x2_[j].push(x2_present ? ds_.x2_[j].intern(*x2[j]) : -1);
    for (std::size_t j = 0; j < z.size(); ++j) ds_.z_[j].push(ds_.z_[j].intern(z[j]));
    for (std::size_t j = 0; j < w.size(); ++j) ds_.w_[j].push(ds_.w_[j].intern(w[j]));
  }

  Dataset build() {
    if (ds_.n() == 0) throw error("empty_dataset", "no records");
    bool any_complete = false;
    for (Pattern p : ds_.pat_)
      if (p == Pattern::complete) {
        any_complete = true;
        break;
      }
    if (!any_complete)
      throw error("no_complete_cases", "dataset has no record with both blocks observed");
    return std::move(ds_);
  }

private:
  static bool check_block(const std::vector<std::optional<std::string>>& block,
                          const char* label, std::size_t row) {
    std::size_t missing = 0;
    for (const auto& cell : block)
      if (!cell) missing++;
    if (missing != 0 && missing != block.size())
      throw error("partial_block",
                  "record " + std::to_string(row) + ": block " + label +
                      " is partially missing; blocks must be missing or present as a whole");
    return missing == 0;
  }

  Dataset ds_;
};

}  // namespace milogit
