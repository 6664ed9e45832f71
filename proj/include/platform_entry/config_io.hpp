#pragma once

// JSON encoding of MarketConfig:
//   { "products": [{"p_good":..,"r_good":..,"r_bad":..}, ...],
//     "costs": [[...], ...],
//     "discounts": {"gamma_seller":..,"gamma_platform":..,"gamma_buyer":..},
//     "horizon": 30, "n_sellers": 2 }
// gamma_buyer may be omitted and then follows gamma_platform.

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "platform_entry/core_types.hpp"

namespace platform_entry {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json encode(const MarketConfig& config) {
  json products = json::array();
  for (const auto& p : config.products)
    products.push_back({{"p_good", p.p_good}, {"r_good", p.r_good}, {"r_bad", p.r_bad}});
  return json{{"products", products},
              {"costs", config.costs.rows()},
              {"discounts",
               {{"gamma_seller", config.discounts.gamma_seller},
                {"gamma_platform", config.discounts.gamma_platform},
                {"gamma_buyer", config.discounts.gamma_buyer}}},
              {"horizon", config.horizon},
              {"n_sellers", config.n_sellers}};
}

namespace detail {
inline const json& require_key(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  return j.at(key);
}

inline double require_number(const json& j, const char* key) {
  const json& v = require_key(j, key);
  if (!v.is_number()) throw ConfigError(std::string("key '") + key + "' must be a number");
  return v.get<double>();
}
}  // namespace detail

/// Parses a config; structural problems throw ConfigError, value-level
/// problems are left to validate().
inline MarketConfig decode_config(const json& j) {
  MarketConfig cfg;
  const json& products = detail::require_key(j, "products");
  if (!products.is_array()) throw ConfigError("'products' must be an array");
  for (std::size_t k = 0; k < products.size(); ++k) {
    ProductSpec p;
    p.id = k;
    p.p_good = detail::require_number(products[k], "p_good");
    p.r_good = detail::require_number(products[k], "r_good");
    p.r_bad = detail::require_number(products[k], "r_bad");
    cfg.products.push_back(p);
  }

  const json& costs = detail::require_key(j, "costs");
  if (!costs.is_array()) throw ConfigError("'costs' must be an array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& row : costs) {
    if (!row.is_array()) throw ConfigError("'costs' rows must be arrays");
    std::vector<double> r;
    for (const auto& v : row) {
      if (!v.is_number()) throw ConfigError("costs must be numbers");
      r.push_back(v.get<double>());
    }
    rows.push_back(std::move(r));
  }
  try {
    cfg.costs = CostMatrix::from_rows(rows);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const json& d = detail::require_key(j, "discounts");
  cfg.discounts.gamma_seller = detail::require_number(d, "gamma_seller");
  cfg.discounts.gamma_platform = detail::require_number(d, "gamma_platform");
  cfg.discounts.gamma_buyer =
      d.contains("gamma_buyer") ? detail::require_number(d, "gamma_buyer") : cfg.discounts.gamma_platform;

  cfg.horizon = j.contains("horizon") ? j.at("horizon").get<int>() : 30;
  cfg.n_sellers = j.contains("n_sellers") ? j.at("n_sellers").get<std::size_t>() : cfg.costs.n_sellers();
  return cfg;
}

inline MarketConfig decode_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return decode_config(j);
}

inline MarketConfig decode_config(const char* text) { return decode_config(std::string(text)); }

inline MarketConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  // Scenario files wrap the config next to a certificate block.
  if (j.contains("config")) return decode_config(j.at("config"));
  return decode_config(j);
}

inline json encode(const PlatformPolicy& policy) {
  auto entry_json = [](EntryTime e) -> json { return e.is_never() ? json("inf") : json(e.steps()); };
  return std::visit(
      [&](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GlobalEntry>) {
          return {{"setting", "global"}, {"entry", entry_json(p.entry)}};
        } else if constexpr (std::is_same_v<P, GlobalEntryFee>) {
          return {{"setting", "fee"}, {"entry", entry_json(p.entry)}, {"alpha", p.alpha}};
        } else {
          json e = json::array();
          for (auto t : p.entries) e.push_back(entry_json(t));
          return {{"setting", "hetero"}, {"entry", e}};
        }
      },
      policy);
}

}  // namespace platform_entry
