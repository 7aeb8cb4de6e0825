#include "hyperpart/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <stdexcept>

namespace hyperpart {

namespace {

template <typename T>
T parseNumber(const std::string& key, const std::string& value) {
  T parsed{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw std::invalid_argument("invalid value '" + value + "' for option " + key);
  }
  return parsed;
}

double parseDouble(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double parsed = std::stod(value, &pos);
    if (pos != value.size()) {
      throw std::invalid_argument("");
    }
    return parsed;
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid value '" + value + "' for option " + key);
  }
}

bool parseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") {
    return true;
  }
  if (value == "false" || value == "0") {
    return false;
  }
  throw std::invalid_argument("invalid value '" + value + "' for option " + key);
}

}  // namespace

void PartitionConfig::setOption(const std::string& key, const std::string& value) {
  using Setter = std::function<void(PartitionConfig&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"community.max_rounds",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.community_max_rounds = parseNumber<int>(k, v);
       }},
      {"community.min_move_fraction",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.community_min_move_fraction = parseDouble(k, v);
       }},
      {"community.max_depth",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.community_max_depth = parseNumber<int>(k, v);
       }},
      {"community.degree_weighting",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.community_degree_weighting = parseBool(k, v);
       }},
      {"coarsening.contraction_limit_multiplier",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.contraction_limit_multiplier = parseNumber<Weight>(k, v);
       }},
      {"coarsening.pass_reduction_cutoff",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.coarsening_pass_reduction_cutoff = parseDouble(k, v);
       }},
      {"coarsening.min_reduction",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.coarsening_min_reduction = parseDouble(k, v);
       }},
      {"coarsening.sample_interval",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.coarsening_sample_interval = parseNumber<int>(k, v);
       }},
      {"coarsening.rating_table_capacity",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.rating_table_capacity = parseNumber<uint32_t>(k, v);
       }},
      {"ip.runs_per_algorithm",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.ip_runs_per_algorithm = parseNumber<int>(k, v);
       }},
      {"lp.max_rounds",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.lp_max_rounds = parseNumber<int>(k, v);
       }},
      {"fm.seeds_per_search",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.fm_seeds_per_search = parseNumber<int>(k, v);
       }},
      {"fm.stop_alpha",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.fm_stop_alpha = parseDouble(k, v);
       }},
      {"fm.stop_min_moves",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.fm_stop_min_moves = parseNumber<int>(k, v);
       }},
      {"fm.max_rounds",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.fm_max_rounds = parseNumber<int>(k, v);
       }},
      {"fm.min_improvement",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.fm_min_improvement = parseDouble(k, v);
       }},
      {"fm.time_budget_factor",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.fm_time_budget_factor = parseDouble(k, v);
       }},
      {"fm.overlay_budget_per_thread",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.fm_overlay_budget_per_thread = parseNumber<size_t>(k, v);
       }},
      {"fm.local_apply",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.fm_local_apply = parseBool(k, v);
       }},
      {"fm.rollback_epsilon_factor",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.fm_rollback_epsilon_factor = parseDouble(k, v);
       }},
      {"recalc.dense_budget",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.recalc_dense_budget = parseNumber<size_t>(k, v);
       }},
      {"pool.bytes",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.memory_pool_bytes = parseNumber<size_t>(k, v);
       }},
      {"pool.enabled",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.memory_pool_enabled = parseBool(k, v);
       }},
      {"check_bookkeeping",
       [](PartitionConfig& c, const std::string& k, const std::string& v) {
         c.check_bookkeeping = parseBool(k, v);
       }},
  };

  auto it = setters.find(key);
  if (it == setters.end()) {
    throw std::invalid_argument("unknown option '" + key + "'");
  }
  it->second(*this, key, value);
}

void PartitionConfig::setOption(const std::string& key_equals_value) {
  const size_t pos = key_equals_value.find('=');
  if (pos == std::string::npos) {
    throw std::invalid_argument("expected key=value, got '" + key_equals_value + "'");
  }
  setOption(key_equals_value.substr(0, pos), key_equals_value.substr(pos + 1));
}

}  // namespace hyperpart
