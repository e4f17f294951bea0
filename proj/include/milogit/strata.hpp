#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "milogit/dataset.hpp"

namespace milogit {

// Dense grouping of records by an exact-match key.  Group ids are assigned in
// first-occurrence order, so they are deterministic for a given dataset.
struct GroupIndex {
  std::vector<std::int32_t> gid;  // per record; -1 when a required block is missing
  std::int32_t n_groups = 0;
  std::vector<std::int32_t> rep;  // one representative record per group
};

// Key parts beyond y (which is always part of the key).
namespace keypart {
inline constexpr unsigned v = 1;   // (z, w) tokens
inline constexpr unsigned x1 = 2;  // requires x1 observed
inline constexpr unsigned x2 = 4;  // requires x2 observed
}  // namespace keypart

namespace detail {
struct CodeVecHash {
  std::size_t operator()(const std::vector<std::int32_t>& v) const {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (std::int32_t x : v) h = (h ^ static_cast<std::uint32_t>(x)) * 0x100000001b3ULL;
    return h;
  }
};
}  // namespace detail

inline GroupIndex build_groups(const Dataset& ds, unsigned parts) {
  GroupIndex g;
  g.gid.assign(ds.n(), -1);
  std::unordered_map<std::vector<std::int32_t>, std::int32_t, detail::CodeVecHash> seen;
  std::vector<std::int32_t> key;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if ((parts & keypart::x1) && !ds.x1_present(i)) continue;
    if ((parts & keypart::x2) && !ds.x2_present(i)) continue;
    key.clear();
    key.push_back(ds.y(i));
    if (parts & keypart::v) {
      for (int j = 0; j < ds.q(); ++j) key.push_back(ds.z_col(j).code(i));
      for (int j = 0; j < ds.w_count(); ++j) key.push_back(ds.w_col(j).code(i));
    }
    if (parts & keypart::x1)
      for (int j = 0; j < ds.s(); ++j) key.push_back(ds.x1_col(j).code(i));
    if (parts & keypart::x2)
      for (int j = 0; j < ds.p2(); ++j) key.push_back(ds.x2_col(j).code(i));
    auto [it, inserted] = seen.emplace(key, g.n_groups);
    if (inserted) {
      g.rep.push_back(static_cast<std::int32_t>(i));
      g.n_groups++;
    }
    g.gid[i] = it->second;
  }
  return g;
}

}  // namespace milogit
