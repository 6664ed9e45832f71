#pragma once

// Domain model shared by the single-seller solver, the platform optimizer and
// the multi-seller game: products, costs, platform policies and discounting.

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace platform_entry {

/// Absolute tolerance used for every monetary comparison.
inline constexpr double kMoneyTolerance = 1e-9;

/// One potential product: prior probability of the good state and the
/// per-step rewards of the good and bad states.
struct ProductSpec {
  std::size_t id = 0;
  double p_good = 0.0;
  double r_good = 0.0;
  double r_bad = 0.0;

  friend bool operator==(const ProductSpec&, const ProductSpec&) = default;
};

/// One-time innovation costs c[i][j] for seller i exploring product j.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t n_sellers, std::size_t n_products, double fill = 0.0)
      : rows_(n_sellers), cols_(n_products), data_(n_sellers * n_products, fill) {}

  /// Builds a matrix from nested rows; throws if the rows are ragged.
  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    CostMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_) throw std::invalid_argument("cost matrix rows have different lengths");
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  /// Single-seller convenience: one row of costs.
  static CostMatrix single_row(const std::vector<double>& costs) { return from_rows({costs}); }

  std::size_t n_sellers() const { return rows_; }
  std::size_t n_products() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double at(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) throw std::out_of_range("cost matrix index out of range");
    return (*this)(i, j);
  }

  std::vector<double> row(std::size_t i) const {
    return {data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_)};
  }

  std::vector<std::vector<double>> rows() const {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < rows_; ++i) out.push_back(row(i));
    return out;
  }

  double max_entry() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, v);
    return m;
  }

  friend bool operator==(const CostMatrix&, const CostMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Platform entry delay: a positive number of steps, or never.
class EntryTime {
 public:
  constexpr EntryTime() = default;  // never
  explicit EntryTime(int steps) : steps_(steps) {
    if (steps < 1) throw std::invalid_argument("entry time must be >= 1");
  }

  static constexpr EntryTime never() { return EntryTime{}; }

  constexpr bool is_never() const { return steps_ == kNever; }
  int steps() const {
    if (is_never()) throw std::logic_error("entry time is infinite");
    return steps_;
  }

  /// Real-valued view; +inf for never.
  double as_real() const {
    return is_never() ? std::numeric_limits<double>::infinity() : static_cast<double>(steps_);
  }

  std::string to_string() const { return is_never() ? "inf" : std::to_string(steps_); }

  friend bool operator==(const EntryTime&, const EntryTime&) = default;
  friend auto operator<=>(const EntryTime& a, const EntryTime& b) { return a.steps_ <=> b.steps_; }

 private:
  static constexpr int kNever = std::numeric_limits<int>::max();
  int steps_ = kNever;
};

/// gamma^T with gamma^inf = 0; T may be fractional for boundary solving.
inline double discount_power(double gamma, double entry_time) {
  if (std::isinf(entry_time)) return 0.0;
  return std::pow(gamma, entry_time);
}

struct GlobalEntry {
  EntryTime entry;
  friend bool operator==(const GlobalEntry&, const GlobalEntry&) = default;
};

struct GlobalEntryFee {
  EntryTime entry;
  double alpha = 0.0;
  friend bool operator==(const GlobalEntryFee&, const GlobalEntryFee&) = default;
};

struct HeterogeneousEntry {
  std::vector<EntryTime> entries;
  friend bool operator==(const HeterogeneousEntry&, const HeterogeneousEntry&) = default;
};

using PlatformPolicy = std::variant<GlobalEntry, GlobalEntryFee, HeterogeneousEntry>;

enum class PolicySetting { kGlobal, kGlobalFee, kHeterogeneous };

inline PolicySetting setting_of(const PlatformPolicy& policy) {
  return static_cast<PolicySetting>(policy.index());
}

inline PlatformPolicy no_entry_policy() { return GlobalEntry{EntryTime::never()}; }

/// Entry time the policy applies to product j.
inline EntryTime entry_for(const PlatformPolicy& policy, std::size_t j) {
  return std::visit(
      [j](const auto& p) -> EntryTime {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, HeterogeneousEntry>) {
          if (j >= p.entries.size()) throw std::out_of_range("heterogeneous entry vector too short");
          return p.entries[j];
        } else {
          return p.entry;
        }
      },
      policy);
}

inline double fee_of(const PlatformPolicy& policy) {
  if (const auto* f = std::get_if<GlobalEntryFee>(&policy)) return f->alpha;
  return 0.0;
}

inline std::string to_string(const PlatformPolicy& policy) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GlobalEntry>) {
          os << "T=" << p.entry.to_string();
        } else if constexpr (std::is_same_v<P, GlobalEntryFee>) {
          os << "(T=" << p.entry.to_string() << ", alpha=" << p.alpha << ")";
        } else {
          os << "T=(";
          for (std::size_t j = 0; j < p.entries.size(); ++j) os << (j ? "," : "") << p.entries[j].to_string();
          os << ")";
        }
      },
      policy);
  return os.str();
}

enum class ProductState { kUndeveloped, kGood, kBad, kEntered };

inline char state_letter(ProductState s) {
  switch (s) {
    case ProductState::kUndeveloped: return 'U';
    case ProductState::kGood: return 'G';
    case ProductState::kBad: return 'B';
    case ProductState::kEntered: return 'E';
  }
  return '?';
}

inline ProductState state_from_letter(char c) {
  switch (c) {
    case 'U': return ProductState::kUndeveloped;
    case 'G': return ProductState::kGood;
    case 'B': return ProductState::kBad;
    case 'E': return ProductState::kEntered;
    default: throw std::invalid_argument(std::string("unknown product state '") + c + "'");
  }
}

/// U->G, U->B, G->E are the only legal changes; everything may stay put.
inline bool is_legal_transition(ProductState from, ProductState to) {
  if (from == to) return true;
  switch (from) {
    case ProductState::kUndeveloped: return to == ProductState::kGood || to == ProductState::kBad;
    case ProductState::kGood: return to == ProductState::kEntered;
    default: return false;
  }
}

struct DiscountProfile {
  double gamma_seller = 0.9;
  double gamma_platform = 0.95;
  double gamma_buyer = 0.95;
  friend bool operator==(const DiscountProfile&, const DiscountProfile&) = default;
};

struct MarketConfig {
  std::vector<ProductSpec> products;
  CostMatrix costs;
  DiscountProfile discounts;
  int horizon = 30;
  std::size_t n_sellers = 1;

  std::size_t n_products() const { return products.size(); }
  double cost(std::size_t seller, std::size_t product) const { return costs(seller, product); }

  friend bool operator==(const MarketConfig&, const MarketConfig&) = default;
};

struct Violation {
  std::string field;
  std::string message;
  friend bool operator==(const Violation&, const Violation&) = default;
};

namespace detail {
inline bool in_open_unit(double g) { return std::isfinite(g) && g > 0.0 && g < 1.0; }
}  // namespace detail

/// Lists every broken invariant of the configuration; empty means valid.
inline std::vector<Violation> validate(const MarketConfig& config) {
  std::vector<Violation> out;
  auto add = [&out](std::string field, std::string msg) { out.push_back({std::move(field), std::move(msg)}); };

  for (std::size_t j = 0; j < config.products.size(); ++j) {
    const auto& p = config.products[j];
    const std::string f = "products[" + std::to_string(j) + "]";
    if (!(p.p_good >= 0.0 && p.p_good <= 1.0)) add(f + ".p_good", "p_good in [0,1]");
    if (!(p.r_bad >= 0.0) || !std::isfinite(p.r_bad)) add(f + ".r_bad", "r_bad >= 0");
    if (!(p.r_good > p.r_bad) || !std::isfinite(p.r_good)) add(f + ".r_good", "r_good > r_bad");
    if (p.id != j) add(f + ".id", "product id matches its position");
  }

  if (config.costs.n_products() != config.products.size() || config.costs.n_sellers() != config.n_sellers) {
    add("costs", "cost matrix is n_sellers x n_products");
  } else {
    for (std::size_t i = 0; i < config.costs.n_sellers(); ++i)
      for (std::size_t j = 0; j < config.costs.n_products(); ++j) {
        double c = config.costs(i, j);
        if (!std::isfinite(c) || c < 0.0)
          add("costs[" + std::to_string(i) + "][" + std::to_string(j) + "]", "cost finite and >= 0");
      }
  }

  if (!detail::in_open_unit(config.discounts.gamma_seller)) add("discounts.gamma_seller", "gamma in (0,1)");
  if (!detail::in_open_unit(config.discounts.gamma_platform)) add("discounts.gamma_platform", "gamma in (0,1)");
  if (!detail::in_open_unit(config.discounts.gamma_buyer)) add("discounts.gamma_buyer", "gamma in (0,1)");
  if (config.horizon < 1) add("horizon", "horizon >= 1");
  if (config.n_sellers < 1) add("n_sellers", "n_sellers >= 1");
  return out;
}

/// Policy invariants; n_products sizes the heterogeneous vector.
inline std::vector<Violation> validate(const PlatformPolicy& policy, std::size_t n_products) {
  std::vector<Violation> out;
  if (const auto* f = std::get_if<GlobalEntryFee>(&policy)) {
    if (!(f->alpha >= 0.0 && f->alpha <= 1.0)) out.push_back({"alpha", "alpha in [0,1]"});
  }
  if (const auto* h = std::get_if<HeterogeneousEntry>(&policy)) {
    if (h->entries.size() != n_products) out.push_back({"entries", "one entry time per product"});
  }
  return out;
}

inline void require_valid(const MarketConfig& config) {
  auto v = validate(config);
  if (!v.empty()) throw std::invalid_argument("invalid market config: " + v.front().field + ": " + v.front().message);
}

/// Convenience constructor for a one-seller market.
inline MarketConfig single_seller_market(std::vector<ProductSpec> products, const std::vector<double>& costs,
                                         DiscountProfile discounts = {}) {
  MarketConfig cfg;
  for (std::size_t j = 0; j < products.size(); ++j) products[j].id = j;
  cfg.products = std::move(products);
  cfg.costs = CostMatrix::single_row(costs);
  cfg.discounts = discounts;
  cfg.n_sellers = 1;
  return cfg;
}

}  // namespace platform_entry
