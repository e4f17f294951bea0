#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "milogit/rng.hpp"
#include "milogit/strata.hpp"

namespace milogit {

enum class Method : std::uint8_t { MI1 = 1, MI2 = 2 };

inline const char* method_name(Method m) { return m == Method::MI1 ? "MI1" : "MI2"; }

// A donor pool is the support of one empirical conditional CDF: the eligible
// donor record indices (ascending) with uniform indicator-ratio weights.
struct DonorPool {
  std::vector<std::int32_t> donors;
  bool empty() const { return donors.empty(); }
  std::size_t size() const { return donors.size(); }
  double weight() const { return 1.0 / static_cast<double>(donors.size()); }
};

// Inverse-CDF pick: cumulative weights in ascending donor-index order; returns
// the first donor whose cumulative weight (j+1)/k reaches u.
inline std::int32_t pick(const DonorPool& pool, double u) {
  if (pool.empty()) throw error("empty_pool", "pick: empty donor pool");
  const auto k = static_cast<std::int32_t>(pool.donors.size());
  std::int32_t lo = 0, hi = k - 1;
  while (lo < hi) {
    std::int32_t mid = lo + (hi - lo) / 2;
    double cum = static_cast<double>(mid + 1) / static_cast<double>(k);
    if (cum >= u)
      hi = mid;
    else
      lo = mid + 1;
  }
  return pool.donors[lo];
}

// One inverse-CDF draw from a pool; returns the selected donor's record index
// (the caller extracts whichever covariate block it needs, or both for a
// joint pool, so donor-level dependence is preserved).
inline std::int32_t sample_block(const DonorPool& pool, RngStream& rng) {
  if (pool.empty()) throw error("empty_pool", "sample_block: empty donor pool");
  return pick(pool, rng.uniform());
}

// Which pool of the fallback chain served a record's imputation (or a
// conditional-mean computation in the variance module).
enum class PoolUsed : std::uint8_t {
  primary = 0,   // the method's own conditioning key
  joint_yv = 1,  // (Y, V) fallback of the MI1 conditional pools
  y_only = 2,    // last-resort Y-keyed pool
  none = 255,    // block was not imputed for this record
};

// All six donor-pool families of the two methods, plus the Y-keyed fallback
// pools.  Pools are stored per group id of the corresponding GroupIndex.
struct DonorIndex {
  GroupIndex g_yv, g_yx2v, g_yx1v, g_y;
  std::vector<DonorPool> yv_complete;   // delta=1 donors per (Y,V): MI1/MI2 joint pool
  std::vector<DonorPool> yx2v_complete; // delta=1 donors per (Y,X2,V): MI1 X1 pool
  std::vector<DonorPool> yx1v_complete; // delta=1 donors per (Y,X1,V): MI1 X2 pool
  std::vector<DonorPool> yv_x1obs;      // delta in {1,3} donors per (Y,V): MI2 X1 pool
  std::vector<DonorPool> yv_x2obs;      // delta in {1,2} donors per (Y,V): MI2 X2 pool
  std::vector<DonorPool> y_complete, y_x1obs, y_x2obs;  // Y-keyed fallbacks
};

inline DonorIndex build_donor_index(const Dataset& ds) {
  DonorIndex ix;
  ix.g_yv = build_groups(ds, keypart::v);
  ix.g_yx2v = build_groups(ds, keypart::v | keypart::x2);
  ix.g_yx1v = build_groups(ds, keypart::v | keypart::x1);
  ix.g_y = build_groups(ds, 0);
  ix.yv_complete.resize(ix.g_yv.n_groups);
  ix.yx2v_complete.resize(ix.g_yx2v.n_groups);
  ix.yx1v_complete.resize(ix.g_yx1v.n_groups);
  ix.yv_x1obs.resize(ix.g_yv.n_groups);
  ix.yv_x2obs.resize(ix.g_yv.n_groups);
  ix.y_complete.resize(ix.g_y.n_groups);
  ix.y_x1obs.resize(ix.g_y.n_groups);
  ix.y_x2obs.resize(ix.g_y.n_groups);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    auto idx = static_cast<std::int32_t>(i);
    Pattern p = ds.pattern(i);
    if (p == Pattern::complete) {
      ix.yv_complete[ix.g_yv.gid[i]].donors.push_back(idx);
      ix.yx2v_complete[ix.g_yx2v.gid[i]].donors.push_back(idx);
      ix.yx1v_complete[ix.g_yx1v.gid[i]].donors.push_back(idx);
      ix.y_complete[ix.g_y.gid[i]].donors.push_back(idx);
    }
    if (ds.x1_present(i)) {  // delta in {1,3}
      ix.yv_x1obs[ix.g_yv.gid[i]].donors.push_back(idx);
      ix.y_x1obs[ix.g_y.gid[i]].donors.push_back(idx);
    }
    if (ds.x2_present(i)) {  // delta in {1,2}
      ix.yv_x2obs[ix.g_yv.gid[i]].donors.push_back(idx);
      ix.y_x2obs[ix.g_y.gid[i]].donors.push_back(idx);
    }
  }
  return ix;
}

// M completed design vectors per record.  Complete records store one design
// shared by all v; incomplete records store M.
struct CompletedSets {
  Method method{};
  int M = 0;
  int d = 0;
  std::size_t n = 0;
  std::vector<std::int32_t> off;   // record -> start slot
  std::vector<std::int32_t> cnt;   // 1 for complete records, M otherwise
  std::vector<double> designs;     // packed, slot*d
  std::vector<PoolUsed> used_x1, used_x2;  // fallback provenance per record

  const double* design_ptr(std::size_t i, int v) const {
    return designs.data() + static_cast<std::size_t>(off[i] + (cnt[i] == 1 ? 0 : v)) * d;
  }
};

namespace detail {

struct ChainPick {
  const DonorPool* pool = nullptr;
  PoolUsed used = PoolUsed::none;
};

inline ChainPick chain2(const DonorPool& a, PoolUsed ua, const DonorPool& b, PoolUsed ub) {
  if (!a.empty()) return {&a, ua};
  if (!b.empty()) return {&b, ub};
  return {};
}

inline ChainPick chain3(const DonorPool& a, PoolUsed ua, const DonorPool& b, PoolUsed ub,
                        const DonorPool& c, PoolUsed uc) {
  if (!a.empty()) return {&a, ua};
  return chain2(b, ub, c, uc);
}

[[noreturn]] inline void empty_pool_error(const Dataset& ds, std::size_t i, const char* what) {
  throw error("empty_pool", std::string("record ") + std::to_string(i + 1) + ": no " + what +
                                " donors share even the outcome value y=" +
                                std::to_string(ds.y(i)));
}

// Fallback chain for the X1 block of a pattern-2 record (and, symmetrically
// via the *other* index families, the X2 block of a pattern-3 record).
inline ChainPick x1_chain(const Dataset& ds, const DonorIndex& ix, Method m, std::size_t i) {
  ChainPick c = m == Method::MI1
                    ? chain3(ix.yx2v_complete[ix.g_yx2v.gid[i]], PoolUsed::primary,
                             ix.yv_complete[ix.g_yv.gid[i]], PoolUsed::joint_yv,
                             ix.y_complete[ix.g_y.gid[i]], PoolUsed::y_only)
                    : chain2(ix.yv_x1obs[ix.g_yv.gid[i]], PoolUsed::primary,
                             ix.y_x1obs[ix.g_y.gid[i]], PoolUsed::y_only);
  if (!c.pool) empty_pool_error(ds, i, "X1");
  return c;
}

inline ChainPick x2_chain(const Dataset& ds, const DonorIndex& ix, Method m, std::size_t i) {
  ChainPick c = m == Method::MI1
                    ? chain3(ix.yx1v_complete[ix.g_yx1v.gid[i]], PoolUsed::primary,
                             ix.yv_complete[ix.g_yv.gid[i]], PoolUsed::joint_yv,
                             ix.y_complete[ix.g_y.gid[i]], PoolUsed::y_only)
                    : chain2(ix.yv_x2obs[ix.g_yv.gid[i]], PoolUsed::primary,
                             ix.y_x2obs[ix.g_y.gid[i]], PoolUsed::y_only);
  if (!c.pool) empty_pool_error(ds, i, "X2");
  return c;
}

inline ChainPick joint_chain(const Dataset& ds, const DonorIndex& ix, std::size_t i) {
  ChainPick c = chain2(ix.yv_complete[ix.g_yv.gid[i]], PoolUsed::primary,
                       ix.y_complete[ix.g_y.gid[i]], PoolUsed::y_only);
  if (!c.pool) empty_pool_error(ds, i, "(X1,X2)");
  return c;
}

}  // namespace detail

// Which pool each record's blocks would draw from, without drawing.  The
// chain choice depends only on pool occupancy, so this matches what impute()
// records in used_x1 / used_x2.
struct PoolProvenance {
  std::vector<PoolUsed> x1, x2;
};

inline PoolProvenance pool_provenance(const Dataset& ds, const DonorIndex& ix, Method method) {
  PoolProvenance pr;
  pr.x1.assign(ds.n(), PoolUsed::none);
  pr.x2.assign(ds.n(), PoolUsed::none);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    switch (ds.pattern(i)) {
      case Pattern::complete:
        break;
      case Pattern::x1_missing:
        pr.x1[i] = detail::x1_chain(ds, ix, method, i).used;
        break;
      case Pattern::x2_missing:
        pr.x2[i] = detail::x2_chain(ds, ix, method, i).used;
        break;
      case Pattern::both_missing:
        pr.x1[i] = pr.x2[i] = detail::joint_chain(ds, ix, i).used;
        break;
    }
  }
  return pr;
}

// Step-1 imputation.  One uniform draw per (record, v) from the documented
// substream rng.substream(i, v), so results do not depend on traversal order.
inline CompletedSets impute(const Dataset& ds, const DonorIndex& ix, Method method, int M,
                            RngStream rng) {
  if (M < 2) throw error("bad_m", "M must be at least 2 (Rubin variance divides by M-1)");
  CompletedSets cs;
  cs.method = method;
  cs.M = M;
  cs.d = ds.d();
  cs.n = ds.n();
  cs.off.resize(ds.n());
  cs.cnt.resize(ds.n());
  cs.used_x1.assign(ds.n(), PoolUsed::none);
  cs.used_x2.assign(ds.n(), PoolUsed::none);
  std::int32_t slots = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    cs.off[i] = slots;
    cs.cnt[i] = ds.pattern(i) == Pattern::complete ? 1 : M;
    slots += cs.cnt[i];
  }
  cs.designs.resize(static_cast<std::size_t>(slots) * cs.d);

  for (std::size_t i = 0; i < ds.n(); ++i) {
    double* base = cs.designs.data() + static_cast<std::size_t>(cs.off[i]) * cs.d;
    switch (ds.pattern(i)) {
      case Pattern::complete:
        ds.design_with_donors(i, -1, -1, base);
        break;
      case Pattern::x1_missing: {
        auto c = detail::x1_chain(ds, ix, method, i);
        cs.used_x1[i] = c.used;
        for (int v = 0; v < M; ++v) {
          double u = rng.substream(i, v).uniform();
          std::int32_t donor = pick(*c.pool, u);
          ds.design_with_donors(i, donor, -1, base + static_cast<std::size_t>(v) * cs.d);
        }
        break;
      }
      case Pattern::x2_missing: {
        auto c = detail::x2_chain(ds, ix, method, i);
        cs.used_x2[i] = c.used;
        for (int v = 0; v < M; ++v) {
          double u = rng.substream(i, v).uniform();
          std::int32_t donor = pick(*c.pool, u);
          ds.design_with_donors(i, -1, donor, base + static_cast<std::size_t>(v) * cs.d);
        }
        break;
      }
      case Pattern::both_missing: {
        auto c = detail::joint_chain(ds, ix, i);
        cs.used_x1[i] = c.used;
        cs.used_x2[i] = c.used;
        for (int v = 0; v < M; ++v) {
          double u = rng.substream(i, v).uniform();
          std::int32_t donor = pick(*c.pool, u);  // joint draw: one donor, both blocks
          ds.design_with_donors(i, donor, donor, base + static_cast<std::size_t>(v) * cs.d);
        }
        break;
      }
    }
  }
  return cs;
}

// Audit dump of completed dataset v (design-vector values, not tokens).
inline void write_completed_csv(std::ostream& out, const Dataset& ds,
                                const CompletedSets& cs, int v) {
  out << "record,y,pattern";
  for (int j = 0; j < ds.s(); ++j) out << ',' << ds.x1_col(j).name();
  for (int j = 0; j < ds.p2(); ++j) out << ',' << ds.x2_col(j).name();
  for (int j = 0; j < ds.q(); ++j) out << ',' << ds.z_col(j).name();
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out << (i + 1) << ',' << ds.y(i) << ',' << static_cast<int>(ds.pattern(i));
    const double* x = cs.design_ptr(i, v);
    for (int k = 1; k < cs.d; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", x[k]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace milogit
