#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "types.hpp"

namespace dmobo {

enum class ParamKind { continuous, integer, categorical };
enum class Prior { uniform, log_uniform };

// A single parameter value: real for continuous, integer for integer, label for
// categorical.
using ParamValue = std::variant<double, std::int64_t, std::string>;

struct ParameterSpec {
  std::string name;
  ParamKind kind = ParamKind::continuous;
  double low = 0.0;
  double high = 1.0;
  std::vector<std::string> categories;
  Prior prior = Prior::uniform;

  static ParameterSpec continuous(std::string name, double low, double high,
                                  Prior prior = Prior::uniform) {
    return {std::move(name), ParamKind::continuous, low, high, {}, prior};
  }
  static ParameterSpec integer(std::string name, std::int64_t low, std::int64_t high,
                               Prior prior = Prior::uniform) {
    return {std::move(name), ParamKind::integer, static_cast<double>(low),
            static_cast<double>(high), {}, prior};
  }
  static ParameterSpec categorical(std::string name, std::vector<std::string> categories) {
    return {std::move(name), ParamKind::categorical, 0.0, 0.0, std::move(categories),
            Prior::uniform};
  }

  void validate() const {
    if (name.empty()) throw ConfigError("parameter name must not be empty");
    switch (kind) {
      case ParamKind::continuous:
        if (!(low < high)) throw ConfigError("parameter '" + name + "': requires low < high");
        break;
      case ParamKind::integer:
        if (!(low <= high)) throw ConfigError("parameter '" + name + "': requires low <= high");
        if (low != std::floor(low) || high != std::floor(high))
          throw ConfigError("parameter '" + name + "': integer bounds must be integral");
        break;
      case ParamKind::categorical: {
        if (categories.empty())
          throw ConfigError("parameter '" + name + "': categories must be non-empty");
        std::set<std::string> seen(categories.begin(), categories.end());
        if (seen.size() != categories.size())
          throw ConfigError("parameter '" + name + "': duplicate categories");
        return;
      }
    }
    if (!std::isfinite(low) || !std::isfinite(high))
      throw ConfigError("parameter '" + name + "': bounds must be finite");
    if (prior == Prior::log_uniform && !(low > 0.0))
      throw ConfigError("parameter '" + name + "': log-uniform prior requires low > 0");
  }

  std::size_t category_index(const std::string& label) const {
    auto it = std::find(categories.begin(), categories.end(), label);
    if (it == categories.end())
      throw StructuralError("parameter '" + name + "': unknown category '" + label + "'");
    return static_cast<std::size_t>(it - categories.begin());
  }

  bool contains(const ParamValue& v) const {
    switch (kind) {
      case ParamKind::continuous: {
        auto* d = std::get_if<double>(&v);
        return d && *d >= low && *d <= high;
      }
      case ParamKind::integer: {
        auto* i = std::get_if<std::int64_t>(&v);
        return i && static_cast<double>(*i) >= low && static_cast<double>(*i) <= high;
      }
      case ParamKind::categorical: {
        auto* s = std::get_if<std::string>(&v);
        return s && std::find(categories.begin(), categories.end(), *s) != categories.end();
      }
    }
    return false;
  }
};

// Values ordered as the parameters of the space they were drawn from.
struct Configuration {
  std::vector<ParamValue> values;
  friend bool operator==(const Configuration&, const Configuration&) = default;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParameterSpec> params) : params_(std::move(params)) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      params_[i].validate();
      if (!index_.emplace(params_[i].name, i).second)
        throw ConfigError("duplicate parameter name '" + params_[i].name + "'");
    }
  }

  std::size_t size() const { return params_.size(); }
  const std::vector<ParameterSpec>& params() const { return params_; }
  const ParameterSpec& operator[](std::size_t i) const { return params_[i]; }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw StructuralError("unknown parameter '" + name + "'");
    return it->second;
  }

  bool contains(const Configuration& c) const {
    if (c.values.size() != params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (!params_[i].contains(c.values[i])) return false;
    return true;
  }

 private:
  std::vector<ParameterSpec> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

// Rounds half-up and clamps into [low, high].
inline std::int64_t round_to_int(double v, double low, double high) {
  double r = std::floor(v + 0.5);
  return static_cast<std::int64_t>(std::clamp(r, low, high));
}

inline double draw_scaled(const ParameterSpec& p, double low, double high, Rng& rng) {
  if (p.prior == Prior::log_uniform) {
    std::uniform_real_distribution<double> u(std::log(low), std::log(high));
    return std::exp(u(rng));
  }
  std::uniform_real_distribution<double> u(low, high);
  return u(rng);
}

}  // namespace detail

inline ParamValue sample_parameter(const ParameterSpec& p, Rng& rng) {
  switch (p.kind) {
    case ParamKind::continuous:
      return std::clamp(detail::draw_scaled(p, p.low, p.high, rng), p.low, p.high);
    case ParamKind::integer:
      // Each integer owns the unit cell around it on the (log-)scaled axis.
      return detail::round_to_int(detail::draw_scaled(p, p.low - 0.5, p.high + 0.5, rng), p.low,
                                  p.high);
    case ParamKind::categorical: {
      std::uniform_int_distribution<std::size_t> u(0, p.categories.size() - 1);
      return p.categories[u(rng)];
    }
  }
  return 0.0;
}

/// Draws every parameter independently from its prior.
inline Configuration sample(const SearchSpace& space, Rng& rng) {
  Configuration c;
  c.values.reserve(space.size());
  for (const auto& p : space.params()) c.values.push_back(sample_parameter(p, rng));
  return c;
}

inline std::vector<Configuration> grid_or_random_candidates(const SearchSpace& space,
                                                            std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("candidate count must be >= 1");
  std::vector<Configuration> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample(space, rng));
  return out;
}

inline double encode_value(const ParameterSpec& p, const ParamValue& v) {
  switch (p.kind) {
    case ParamKind::continuous: {
      auto* d = std::get_if<double>(&v);
      if (!d) throw StructuralError("parameter '" + p.name + "': expected a real value");
      return p.prior == Prior::log_uniform ? std::log10(*d) : *d;
    }
    case ParamKind::integer: {
      auto* i = std::get_if<std::int64_t>(&v);
      if (!i) throw StructuralError("parameter '" + p.name + "': expected an integer value");
      double d = static_cast<double>(*i);
      return p.prior == Prior::log_uniform ? std::log10(d) : d;
    }
    case ParamKind::categorical: {
      auto* s = std::get_if<std::string>(&v);
      if (!s) throw StructuralError("parameter '" + p.name + "': expected a category label");
      return static_cast<double>(p.category_index(*s));
    }
  }
  return 0.0;
}

/// Fixed-length numeric features: log10 for log-uniform priors, ordinal index
/// for categoricals.
inline std::vector<double> encode(const SearchSpace& space, const Configuration& config) {
  if (config.values.size() != space.size())
    throw StructuralError("configuration has " + std::to_string(config.values.size()) +
                          " values, space has " + std::to_string(space.size()));
  std::vector<double> x(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) x[i] = encode_value(space[i], config.values[i]);
  return x;
}

// Encoded-domain bounds of a parameter (inverse of encode for decode()).
inline std::pair<double, double> encoded_bounds(const ParameterSpec& p) {
  if (p.kind == ParamKind::categorical)
    return {0.0, static_cast<double>(p.categories.size() - 1)};
  if (p.prior == Prior::log_uniform) return {std::log10(p.low), std::log10(p.high)};
  return {p.low, p.high};
}

inline ParamValue decode_value(const ParameterSpec& p, double x) {
  switch (p.kind) {
    case ParamKind::continuous: {
      double v = p.prior == Prior::log_uniform ? std::pow(10.0, x) : x;
      return std::clamp(v, p.low, p.high);
    }
    case ParamKind::integer: {
      double v = p.prior == Prior::log_uniform ? std::pow(10.0, x) : x;
      return detail::round_to_int(v, p.low, p.high);
    }
    case ParamKind::categorical: {
      auto idx = detail::round_to_int(x, 0.0, static_cast<double>(p.categories.size() - 1));
      return p.categories[static_cast<std::size_t>(idx)];
    }
  }
  return 0.0;
}

inline Configuration decode(const SearchSpace& space, const std::vector<double>& x) {
  if (x.size() != space.size()) throw StructuralError("feature vector length mismatch");
  Configuration c;
  c.values.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c.values.push_back(decode_value(space[i], x[i]));
  return c;
}

// ---------------------------------------------------------------------------
// JSON schema:
//   {"parameters": [
//      {"name": "lr", "kind": "continuous", "bounds": [1e-5, 1e-1], "prior": "log-uniform"},
//      {"name": "units", "kind": "integer", "bounds": [16, 512], "prior": "uniform"},
//      {"name": "opt", "kind": "categorical", "categories": ["adam", "sgd"]}]}
// A bare array of parameter objects is accepted as well. "prior" defaults to
// "uniform".

inline ParameterSpec parameter_from_json(const nlohmann::json& j) {
  try {
    ParameterSpec p;
    p.name = j.at("name").get<std::string>();
    auto kind = j.at("kind").get<std::string>();
    if (kind == "categorical") {
      p.kind = ParamKind::categorical;
      p.categories = j.at("categories").get<std::vector<std::string>>();
      return p;
    }
    if (kind == "continuous") {
      p.kind = ParamKind::continuous;
    } else if (kind == "integer") {
      p.kind = ParamKind::integer;
    } else {
      throw ConfigError("parameter '" + p.name + "': unknown kind '" + kind + "'");
    }
    auto b = j.at("bounds");
    if (!b.is_array() || b.size() != 2)
      throw ConfigError("parameter '" + p.name + "': bounds must be [low, high]");
    p.low = b[0].get<double>();
    p.high = b[1].get<double>();
    auto prior = j.value("prior", std::string("uniform"));
    if (prior == "uniform") {
      p.prior = Prior::uniform;
    } else if (prior == "log-uniform" || prior == "log_uniform") {
      p.prior = Prior::log_uniform;
    } else {
      throw ConfigError("parameter '" + p.name + "': unknown prior '" + prior + "'");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed parameter: ") + e.what());
  }
}

inline SearchSpace space_from_json(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_array() ? j : j.at("parameters");
  std::vector<ParameterSpec> params;
  for (const auto& p : list) params.push_back(parameter_from_json(p));
  return SearchSpace(std::move(params));
}

inline nlohmann::ordered_json space_to_json(const SearchSpace& space) {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& p : space.params()) {
    nlohmann::ordered_json e;
    e["name"] = p.name;
    switch (p.kind) {
      case ParamKind::categorical:
        e["kind"] = "categorical";
        e["categories"] = p.categories;
        break;
      case ParamKind::continuous:
      case ParamKind::integer:
        e["kind"] = p.kind == ParamKind::continuous ? "continuous" : "integer";
        if (p.kind == ParamKind::integer)
          e["bounds"] = {static_cast<std::int64_t>(p.low), static_cast<std::int64_t>(p.high)};
        else
          e["bounds"] = {p.low, p.high};
        e["prior"] = p.prior == Prior::log_uniform ? "log-uniform" : "uniform";
        break;
    }
    list.push_back(std::move(e));
  }
  return {{"parameters", std::move(list)}};
}

inline nlohmann::ordered_json config_to_json(const SearchSpace& space, const Configuration& c) {
  if (c.values.size() != space.size()) throw StructuralError("configuration/space mismatch");
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::visit([&](const auto& v) { j[space[i].name] = v; }, c.values[i]);
  }
  return j;
}

template <typename Json>
Configuration config_from_json(const SearchSpace& space, const Json& j) {
  Configuration c;
  c.values.reserve(space.size());
  for (const auto& p : space.params()) {
    if (!j.contains(p.name)) throw StructuralError("configuration lacks parameter '" + p.name + "'");
    const auto& v = j.at(p.name);
    switch (p.kind) {
      case ParamKind::continuous:
        c.values.emplace_back(v.template get<double>());
        break;
      case ParamKind::integer:
        c.values.emplace_back(v.template get<std::int64_t>());
        break;
      case ParamKind::categorical:
        c.values.emplace_back(v.template get<std::string>());
        break;
    }
  }
  if (!space.contains(c)) throw StructuralError("configuration outside the search space");
  return c;
}

}  // namespace dmobo
