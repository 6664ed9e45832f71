#pragma once

// Optimal platform policy for a single Gittins-index seller.
//
// The seller's decision at any state only depends on how the products'
// indices compare with each other and with zero. Those comparisons flip on
// three kinds of boundaries:
//   zero             G_j(U) = 0
//   bad-indifference (1-alpha) r^b_j = G_k(U)
//   undeveloped-ind. G_j(U) = G_k(U)
// Every policy is classified by the sign of each boundary; policies with the
// same sign vector form a region with a fixed seller strategy, and inside a
// region the platform's utility falls with every entry time and rises with
// the fee. So only the region's Pareto points (earliest entry, largest fee)
// need evaluating.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "platform_entry/core_types.hpp"
#include "platform_entry/gittins.hpp"
#include "platform_entry/seller_sim.hpp"

namespace platform_entry {

enum class BoundaryKind { kZero, kBadIndifference, kUndevelopedIndifference };

inline const char* to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::kZero: return "zero";
    case BoundaryKind::kBadIndifference: return "bad-indifference";
    case BoundaryKind::kUndevelopedIndifference: return "undeveloped-indifference";
  }
  return "?";
}

/// A point of the policy space: one real entry time per product and a fee.
struct PolicyPoint {
  std::vector<double> entry;
  double alpha = 0.0;
};

struct Boundary {
  BoundaryKind kind = BoundaryKind::kZero;
  std::size_t first = 0;   // j
  std::size_t second = 0;  // k; equals j for zero boundaries
  /// Solved points on the boundary inside the search bounds.
  std::vector<PolicyPoint> locus;
};

struct PolicyBounds {
  int t_max = 30;
  double alpha_cap = 1.0;
  int t_floor = 1;
  double alpha_step = 0.01;
};

struct Region {
  PolicySetting setting = PolicySetting::kGlobal;
  std::vector<std::uint8_t> signs;  // one per boundary, 1 = positive side
  std::size_t dims = 1;             // entry coordinates per member
  std::vector<int> entry_times;     // flattened members, dims per member
  std::vector<double> alphas;       // one per member
  // Global setting only: open interval of T bracketing the members.
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return alphas.size(); }
  int entry(std::size_t member, std::size_t coord) const { return entry_times[member * dims + coord]; }

  PlatformPolicy policy_at(std::size_t member, std::size_t n_products) const {
    switch (setting) {
      case PolicySetting::kGlobal: return GlobalEntry{EntryTime(entry(member, 0))};
      case PolicySetting::kGlobalFee: return GlobalEntryFee{EntryTime(entry(member, 0)), alphas[member]};
      case PolicySetting::kHeterogeneous: {
        HeterogeneousEntry h;
        for (std::size_t j = 0; j < n_products; ++j) h.entries.emplace_back(entry(member, j));
        return h;
      }
    }
    throw std::logic_error("unknown policy setting");
  }

  void add(const std::vector<int>& entries, double alpha) {
    entry_times.insert(entry_times.end(), entries.begin(), entries.end());
    alphas.push_back(alpha);
  }
};

inline constexpr std::size_t kMaxHeterogeneousProducts = 6;

namespace detail {

inline constexpr double kBoundaryResidualTolerance = 1e-6;

/// Unfloored index evaluated from the affine form; accepts any T > 0.
inline double raw_index(const ProductSpec& p, double cost, double gamma, double entry_time, double alpha) {
  const double x = discount_power(gamma, entry_time);
  return std::max(rule_ratio(p, cost, gamma, alpha, StoppingRule::kRule2).value(x),
                  rule_ratio(p, cost, gamma, alpha, StoppingRule::kRule3).value(x));
}

inline double floored_index(const ProductSpec& p, double cost, double gamma, double entry_time, double alpha) {
  const double v = raw_index(p, cost, gamma, entry_time, alpha);
  return v > kMoneyTolerance ? v : 0.0;
}

inline double entry_from_x(double x, double gamma) { return std::log(x) / std::log(gamma); }

inline void push_unique(std::vector<double>& v, double value) {
  for (double e : v)
    if (std::abs(e - value) < 1e-9) return;
  v.push_back(value);
}

}  // namespace detail

/// Signed residual of a boundary's defining equation at a policy point, seen
/// by seller 0.
inline double boundary_residual(const Boundary& b, const MarketConfig& config, const PolicyPoint& at) {
  const double gamma = config.discounts.gamma_seller;
  auto g = [&](std::size_t j, bool floored) {
    const auto& p = config.products[j];
    return floored ? detail::floored_index(p, config.cost(0, j), gamma, at.entry[j], at.alpha)
                   : detail::raw_index(p, config.cost(0, j), gamma, at.entry[j], at.alpha);
  };
  switch (b.kind) {
    case BoundaryKind::kZero: return g(b.first, false);
    case BoundaryKind::kBadIndifference:
      return (1.0 - at.alpha) * config.products[b.first].r_bad - g(b.second, true);
    case BoundaryKind::kUndevelopedIndifference: return g(b.first, true) - g(b.second, true);
  }
  return 0.0;
}

/// Which side of the boundary the point lies on, with exact ties resolved the
/// way the seller breaks them (no exploration at index 0, lowest id wins).
inline bool boundary_side(const Boundary& b, double residual) {
  const double tol = kMoneyTolerance;
  switch (b.kind) {
    case BoundaryKind::kZero: return residual > tol;
    case BoundaryKind::kBadIndifference:
      if (residual > tol) return true;
      if (residual < -tol) return false;
      return b.first < b.second;
    case BoundaryKind::kUndevelopedIndifference: return residual >= -tol;
  }
  return false;
}

/// Entry times T > 0 at which max(rule2, rule3) of the product equals level.
/// Each rule is a ratio of affine functions of x = gamma^T, so each gives at
/// most one root; roots where the other rule dominates are dropped.
inline std::vector<double> solve_index_level(const ProductSpec& product, double cost, double gamma, double alpha,
                                             double level) {
  std::vector<double> roots;
  for (auto rule : {StoppingRule::kRule2, StoppingRule::kRule3}) {
    const RuleRatio r = rule_ratio(product, cost, gamma, alpha, rule);
    const double slope = r.n1 - level * r.d1;
    if (std::abs(slope) < 1e-15) continue;
    const double x = -(r.n0 - level * r.d0) / slope;
    if (!(x > 0.0 && x < 1.0)) continue;
    const double t = detail::entry_from_x(x, gamma);
    const double check = detail::raw_index(product, cost, gamma, t, alpha);
    if (std::abs(check - level) <= detail::kBoundaryResidualTolerance * std::max(1.0, std::abs(level)))
      detail::push_unique(roots, t);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

namespace detail {

/// Entry times where two products' undeveloped indices cross at a positive
/// value, under one common entry time.
inline std::vector<double> solve_common_crossing(const MarketConfig& config, std::size_t j, std::size_t k,
                                                 double alpha) {
  const double gamma = config.discounts.gamma_seller;
  const auto& pj = config.products[j];
  const auto& pk = config.products[k];
  std::vector<double> roots;
  for (auto rj : {StoppingRule::kRule2, StoppingRule::kRule3}) {
    for (auto rk : {StoppingRule::kRule2, StoppingRule::kRule3}) {
      const RuleRatio a = rule_ratio(pj, config.cost(0, j), gamma, alpha, rj);
      const RuleRatio b = rule_ratio(pk, config.cost(0, k), gamma, alpha, rk);
      // (a.n0 + a.n1 x)(b.d0 + b.d1 x) - (b.n0 + b.n1 x)(a.d0 + a.d1 x) = 0
      const double c2 = a.n1 * b.d1 - b.n1 * a.d1;
      const double c1 = a.n0 * b.d1 + a.n1 * b.d0 - b.n0 * a.d1 - b.n1 * a.d0;
      const double c0 = a.n0 * b.d0 - b.n0 * a.d0;
      std::vector<double> xs;
      const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2), 1e-300});
      if (std::abs(c2) <= 1e-13 * scale) {
        if (std::abs(c1) > 1e-13 * scale) xs.push_back(-c0 / c1);
      } else {
        const double disc = c1 * c1 - 4.0 * c2 * c0;
        if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          // Numerically stable pair of roots.
          const double q = -0.5 * (c1 + std::copysign(sq, c1));
          if (q != 0.0) xs.push_back(c0 / q);
          xs.push_back(q / c2);
        }
      }
      for (double x : xs) {
        if (!(x > 0.0 && x < 1.0)) continue;
        const double t = entry_from_x(x, gamma);
        const double gj = floored_index(pj, config.cost(0, j), gamma, t, alpha);
        const double gk = floored_index(pk, config.cost(0, k), gamma, t, alpha);
        if (gj > kMoneyTolerance && std::abs(gj - gk) <= kBoundaryResidualTolerance * std::max(1.0, gj))
          push_unique(roots, t);
      }
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Numerator/denominator of a rule at fixed T, split as
/// index(alpha) = (base + (1 - alpha) * gain) / den.
struct FeeAffine {
  double base = 0.0, gain = 0.0, den = 1.0;
  double value(double alpha) const { return (base + (1.0 - alpha) * gain) / den; }
};

inline FeeAffine fee_affine(const ProductSpec& p, double cost, double gamma, double entry_time, StoppingRule rule) {
  const double x = discount_power(gamma, entry_time);
  const RuleRatio full = rule_ratio(p, cost, gamma, 0.0, rule);
  const RuleRatio none = rule_ratio(p, cost, gamma, 1.0, rule);
  FeeAffine f;
  f.base = none.numerator(x);
  f.gain = full.numerator(x) - f.base;
  f.den = full.denominator(x);
  return f;
}

/// Products identical in every parameter the seller sees can never be
/// separated by a boundary.
inline bool same_arm(const MarketConfig& c, std::size_t j, std::size_t k) {
  const auto& a = c.products[j];
  const auto& b = c.products[k];
  return a.p_good == b.p_good && a.r_good == b.r_good && a.r_bad == b.r_bad && c.cost(0, j) == c.cost(0, k);
}

inline bool in_entry_range(double t, const PolicyBounds& bounds) {
  return t >= bounds.t_floor - 1e-12 && t <= bounds.t_max + 1e-12;
}

inline std::vector<Boundary> boundary_skeleton(const MarketConfig& config, PolicySetting setting) {
  std::vector<Boundary> out;
  const std::size_t m = config.n_products();
  for (std::size_t j = 0; j < m; ++j) out.push_back({BoundaryKind::kZero, j, j, {}});
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k)
      if (j != k && config.products[j].r_bad > 0.0) out.push_back({BoundaryKind::kBadIndifference, j, k, {}});
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = j + 1; k < m; ++k)
      if (setting == PolicySetting::kHeterogeneous || !same_arm(config, j, k))
        out.push_back({BoundaryKind::kUndevelopedIndifference, j, k, {}});
  return out;
}

/// Fee grid values are formed from integers so 0.08 compares as 0.08.
inline double grid_alpha(int k, double step) { return std::round(k * step * 1e9) / 1e9; }

inline PolicyPoint uniform_point(std::size_t m, double t, double alpha) { return {std::vector<double>(m, t), alpha}; }

}  // namespace detail

/// Closed-form boundary loci inside the bounds. Boundaries with no solution in
/// range are omitted.
inline std::vector<Boundary> solve_boundaries(const MarketConfig& config, PolicySetting setting,
                                              const PolicyBounds& bounds = {}) {
  if (bounds.t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  require_valid(config);
  const double gamma = config.discounts.gamma_seller;
  const std::size_t m = config.n_products();
  std::vector<Boundary> out;

  for (Boundary b : detail::boundary_skeleton(config, setting)) {
    const auto& pj = config.products[b.first];
    const auto& pk = config.products[b.second];
    const double cj = config.cost(0, b.first);
    const double ck = config.cost(0, b.second);

    if (setting == PolicySetting::kGlobal || setting == PolicySetting::kHeterogeneous) {
      // Level sets in one product's entry time. In the heterogeneous setting
      // the other coordinates are free; they are reported at the floor.
      auto place = [&](std::size_t coord, double t, std::size_t other = SIZE_MAX, double other_t = 0.0) {
        PolicyPoint pt = detail::uniform_point(m, setting == PolicySetting::kGlobal ? t : bounds.t_floor, 0.0);
        if (setting == PolicySetting::kHeterogeneous) {
          pt.entry[coord] = t;
          if (other != SIZE_MAX) pt.entry[other] = other_t;
        }
        b.locus.push_back(std::move(pt));
      };
      if (b.kind == BoundaryKind::kZero) {
        for (double t : solve_index_level(pj, cj, gamma, 0.0, 0.0))
          if (detail::in_entry_range(t, bounds)) place(b.first, t);
      } else if (b.kind == BoundaryKind::kBadIndifference) {
        for (double t : solve_index_level(pk, ck, gamma, 0.0, pj.r_bad))
          if (detail::in_entry_range(t, bounds)) place(b.second, t);
      } else if (setting == PolicySetting::kGlobal) {
        for (double t : detail::solve_common_crossing(config, b.first, b.second, 0.0))
          if (detail::in_entry_range(t, bounds)) place(b.first, t);
      } else {
        // Sweep one integer coordinate and solve the other on the level set,
        // in both directions so every lattice line crossing is found.
        for (int t = bounds.t_floor; t <= bounds.t_max; ++t) {
          const double level_j = detail::floored_index(pj, cj, gamma, t, 0.0);
          if (level_j > kMoneyTolerance)
            for (double tk : solve_index_level(pk, ck, gamma, 0.0, level_j))
              if (detail::in_entry_range(tk, bounds)) place(b.second, tk, b.first, t);
          const double level_k = detail::floored_index(pk, ck, gamma, t, 0.0);
          if (level_k > kMoneyTolerance)
            for (double tj : solve_index_level(pj, cj, gamma, 0.0, level_k))
              if (detail::in_entry_range(tj, bounds)) place(b.first, tj, b.second, t);
        }
      }
    } else {
      // Fee setting: for each integer T the equations are affine in alpha.
      for (int t = bounds.t_floor; t <= bounds.t_max; ++t) {
        std::vector<double> alphas;
        for (auto rk : {StoppingRule::kRule2, StoppingRule::kRule3}) {
          const auto fk = detail::fee_affine(pk, ck, gamma, t, rk);
          if (b.kind == BoundaryKind::kZero) {
            const auto fj = detail::fee_affine(pj, cj, gamma, t, rk);
            if (std::abs(fj.gain) > 1e-15) alphas.push_back(1.0 + fj.base / fj.gain);
          } else if (b.kind == BoundaryKind::kBadIndifference) {
            const double slope = pj.r_bad * fk.den - fk.gain;
            if (std::abs(slope) > 1e-15) alphas.push_back(1.0 - fk.base / slope);
          } else {
            for (auto rj : {StoppingRule::kRule2, StoppingRule::kRule3}) {
              const auto fj = detail::fee_affine(pj, cj, gamma, t, rj);
              const double slope = fj.gain / fj.den - fk.gain / fk.den;
              if (std::abs(slope) > 1e-15) alphas.push_back(1.0 - (fk.base / fk.den - fj.base / fj.den) / slope);
            }
          }
        }
        std::vector<double> kept;
        for (double a : alphas) {
          if (!(a >= 0.0 && a <= bounds.alpha_cap + 1e-12)) continue;
          PolicyPoint pt = detail::uniform_point(m, t, a);
          const double r = boundary_residual(b, config, pt);
          bool nondegenerate = true;
          if (b.kind == BoundaryKind::kUndevelopedIndifference)
            nondegenerate = detail::floored_index(pj, cj, gamma, t, a) > kMoneyTolerance;
          if (b.kind == BoundaryKind::kBadIndifference) nondegenerate = (1.0 - a) * pj.r_bad > kMoneyTolerance;
          if (nondegenerate && std::abs(r) <= detail::kBoundaryResidualTolerance) detail::push_unique(kept, a);
        }
        std::sort(kept.begin(), kept.end());
        for (double a : kept) b.locus.push_back(detail::uniform_point(m, t, a));
      }
      // Crossings between integer entry times, along each fee grid value.
      const int steps = static_cast<int>(std::floor(bounds.alpha_cap / bounds.alpha_step + 1e-9));
      for (int k = 0; k <= steps; ++k) {
        const double a = detail::grid_alpha(k, bounds.alpha_step);
        std::vector<double> ts;
        if (b.kind == BoundaryKind::kZero) {
          ts = solve_index_level(pj, cj, gamma, a, 0.0);
        } else if (b.kind == BoundaryKind::kBadIndifference) {
          if ((1.0 - a) * pj.r_bad > kMoneyTolerance) ts = solve_index_level(pk, ck, gamma, a, (1.0 - a) * pj.r_bad);
        } else {
          ts = detail::solve_common_crossing(config, b.first, b.second, a);
        }
        for (double t : ts)
          if (detail::in_entry_range(t, bounds) && std::abs(t - std::round(t)) > 1e-9)
            b.locus.push_back(detail::uniform_point(m, t, a));
      }
    }
    if (!b.locus.empty()) out.push_back(std::move(b));
  }
  return out;
}

namespace detail {

/// Enumerates the integer (and alpha-grid) policy lattice of a setting.
template <typename Visit>
void for_each_lattice_point(std::size_t m, PolicySetting setting, const PolicyBounds& bounds, Visit&& visit) {
  if (setting == PolicySetting::kGlobal) {
    for (int t = bounds.t_floor; t <= bounds.t_max; ++t) visit(std::vector<int>{t}, 0.0);
  } else if (setting == PolicySetting::kGlobalFee) {
    const int steps = static_cast<int>(std::floor(bounds.alpha_cap / bounds.alpha_step + 1e-9));
    for (int t = bounds.t_floor; t <= bounds.t_max; ++t)
      for (int k = 0; k <= steps; ++k) visit(std::vector<int>{t}, grid_alpha(k, bounds.alpha_step));
  } else {
    std::vector<int> e(m, bounds.t_floor);
    while (true) {
      visit(e, 0.0);
      std::size_t c = 0;
      while (c < m && ++e[c] > bounds.t_max) e[c++] = bounds.t_floor;
      if (c == m) break;
    }
  }
}

}  // namespace detail

/// Groups the policy lattice by boundary sign vector. In the global setting a
/// region is a maximal run of consecutive entry times, bracketed by the
/// surrounding boundary loci.
inline std::vector<Region> enumerate_regions(const MarketConfig& config, const std::vector<Boundary>& boundaries,
                                             PolicySetting setting, const PolicyBounds& bounds = {}) {
  const std::size_t m = config.n_products();
  if (setting == PolicySetting::kHeterogeneous && m > kMaxHeterogeneousProducts)
    throw std::invalid_argument("heterogeneous region enumeration supports at most 6 products");
  const double gamma = config.discounts.gamma_seller;

  // Index cache per product and integer entry time (alpha = 0 settings).
  std::vector<std::vector<double>> raw_cache(m), floored_cache(m);
  if (setting != PolicySetting::kGlobalFee) {
    for (std::size_t j = 0; j < m; ++j)
      for (int t = 0; t <= bounds.t_max; ++t) {
        const double v = t < 1 ? 0.0 : detail::raw_index(config.products[j], config.cost(0, j), gamma, t, 0.0);
        raw_cache[j].push_back(v);
        floored_cache[j].push_back(v > kMoneyTolerance ? v : 0.0);
      }
  }

  std::vector<Region> regions;
  std::map<std::vector<std::uint8_t>, std::size_t> by_signs;
  std::vector<std::uint8_t> signs(boundaries.size());
  std::vector<double> raw(m), floored(m);
  std::vector<int> full(m);

  detail::for_each_lattice_point(m, setting, bounds, [&](const std::vector<int>& coords, double alpha) {
    for (std::size_t j = 0; j < m; ++j) full[j] = setting == PolicySetting::kHeterogeneous ? coords[j] : coords[0];
    if (setting == PolicySetting::kGlobalFee) {
      for (std::size_t j = 0; j < m; ++j) {
        raw[j] = detail::raw_index(config.products[j], config.cost(0, j), gamma, full[j], alpha);
        floored[j] = raw[j] > kMoneyTolerance ? raw[j] : 0.0;
      }
    } else {
      for (std::size_t j = 0; j < m; ++j) {
        raw[j] = raw_cache[j][full[j]];
        floored[j] = floored_cache[j][full[j]];
      }
    }
    for (std::size_t b = 0; b < boundaries.size(); ++b) {
      const Boundary& bd = boundaries[b];
      double r = 0.0;
      switch (bd.kind) {
        case BoundaryKind::kZero: r = raw[bd.first]; break;
        case BoundaryKind::kBadIndifference:
          r = (1.0 - alpha) * config.products[bd.first].r_bad - floored[bd.second];
          break;
        case BoundaryKind::kUndevelopedIndifference: r = floored[bd.first] - floored[bd.second]; break;
      }
      signs[b] = boundary_side(bd, r) ? 1 : 0;
    }

    if (setting == PolicySetting::kGlobal) {
      // Consecutive runs only.
      if (regions.empty() || regions.back().signs != signs) {
        Region r;
        r.setting = setting;
        r.signs = signs;
        r.dims = 1;
        regions.push_back(std::move(r));
      }
      regions.back().add(coords, alpha);
      return;
    }
    auto it = by_signs.find(signs);
    if (it == by_signs.end()) {
      Region r;
      r.setting = setting;
      r.signs = signs;
      r.dims = setting == PolicySetting::kHeterogeneous ? m : 1;
      regions.push_back(std::move(r));
      it = by_signs.emplace(signs, regions.size() - 1).first;
    }
    regions[it->second].add(coords, alpha);
  });

  if (setting == PolicySetting::kGlobal) {
    std::vector<double> loci;
    for (const auto& b : boundaries)
      for (const auto& pt : b.locus) loci.push_back(pt.entry[0]);
    std::sort(loci.begin(), loci.end());
    for (auto& r : regions) {
      const double first = r.entry(0, 0);
      const double last = r.entry(r.size() - 1, 0);
      r.lower = bounds.t_floor;
      r.upper = std::numeric_limits<double>::infinity();
      for (double l : loci) {
        if (l <= first && l > r.lower) r.lower = l;
        if (l > last && l < r.upper) r.upper = l;
      }
    }
  }
  return regions;
}

/// Members of the region no other member improves on: no earlier entry in
/// every coordinate with at least as large a fee, one of them strictly.
inline std::vector<PlatformPolicy> pareto_candidates(const Region& region, std::size_t n_products) {
  if (region.size() == 0) return {};
  const std::size_t d = region.dims;
  std::vector<std::size_t> order(region.size());
  std::iota(order.begin(), order.end(), 0);
  auto weight = [&](std::size_t i) {
    long s = 0;
    for (std::size_t c = 0; c < d; ++c) s += region.entry(i, c);
    return s;
  };
  // Any dominator has a smaller or equal coordinate sum and a larger fee, so
  // it is visited before the points it dominates.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const long wa = weight(a), wb = weight(b);
    if (wa != wb) return wa < wb;
    return region.alphas[a] > region.alphas[b];
  });
  auto dominates = [&](std::size_t a, std::size_t b) {
    bool strict = false;
    for (std::size_t c = 0; c < d; ++c) {
      if (region.entry(a, c) > region.entry(b, c)) return false;
      if (region.entry(a, c) < region.entry(b, c)) strict = true;
    }
    if (region.alphas[a] < region.alphas[b]) return false;
    if (region.alphas[a] > region.alphas[b]) strict = true;
    return strict;
  };
  std::vector<std::size_t> minimal;
  for (std::size_t i : order) {
    bool dominated = false;
    for (std::size_t k : minimal)
      if (dominates(k, i)) {
        dominated = true;
        break;
      }
    if (!dominated) minimal.push_back(i);
  }
  std::vector<PlatformPolicy> out;
  for (std::size_t i : minimal) out.push_back(region.policy_at(i, n_products));
  return out;
}

/// Expected discounted platform utility from the all-undeveloped state.
inline double platform_utility(const PlatformPolicy& policy, const MarketConfig& config) {
  return evaluate_exact(policy, config).platform_utility;
}

struct OptimizeConstraints {
  std::optional<double> alpha_cap;
  std::optional<int> entry_floor;
};

struct OptimizeResult {
  PlatformPolicy policy;
  double platform_utility = 0.0;
  SingleSellerMetrics metrics;
  std::size_t n_boundaries = 0;
  std::size_t n_regions = 0;
  std::size_t n_candidates = 0;
};

namespace detail {

/// True when a is the less aggressive policy: later entry, then lower fee.
inline bool less_aggressive(const PlatformPolicy& a, const PlatformPolicy& b, std::size_t m) {
  double sa = 0.0, sb = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    sa += entry_for(a, j).as_real();
    sb += entry_for(b, j).as_real();
  }
  if (sa != sb) return sa > sb;
  for (std::size_t j = 0; j < m; ++j) {
    const double ea = entry_for(a, j).as_real(), eb = entry_for(b, j).as_real();
    if (ea != eb) return ea > eb;
  }
  return fee_of(a) < fee_of(b);
}

}  // namespace detail

/// Boundaries, regions, Pareto candidates, then the best candidate. Fee cap and
/// entry floor shrink the searched policy space.
inline OptimizeResult optimize(const MarketConfig& config, PolicySetting setting,
                               const OptimizeConstraints& constraints = {}, PolicyBounds bounds = {}) {
  require_valid(config);
  if (setting != PolicySetting::kGlobalFee) bounds.alpha_cap = 0.0;
  if (constraints.alpha_cap) bounds.alpha_cap = std::min(bounds.alpha_cap, *constraints.alpha_cap);
  if (constraints.entry_floor) bounds.t_floor = std::max(bounds.t_floor, *constraints.entry_floor);
  if (bounds.t_floor > bounds.t_max) throw std::invalid_argument("entry floor exceeds t_max");

  const auto boundaries = solve_boundaries(config, setting, bounds);
  const auto regions = enumerate_regions(config, boundaries, setting, bounds);

  OptimizeResult best;
  best.n_boundaries = boundaries.size();
  best.n_regions = regions.size();
  bool have = false;
  const std::size_t m = config.n_products();
  for (const auto& region : regions) {
    for (const auto& policy : pareto_candidates(region, m)) {
      ++best.n_candidates;
      const auto metrics = evaluate_exact(policy, config);
      const double u = metrics.platform_utility;
      const bool better = !have || u > best.platform_utility + kMoneyTolerance ||
                          (std::abs(u - best.platform_utility) <= kMoneyTolerance &&
                           detail::less_aggressive(policy, best.policy, m));
      if (better) {
        best.policy = policy;
        best.platform_utility = u;
        best.metrics = metrics;
        have = true;
      }
    }
  }
  if (!have) throw std::logic_error("policy space is empty");
  return best;
}

}  // namespace platform_entry
