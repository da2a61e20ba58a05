#pragma once

#include <cstdint>
#include <optional>

#include <json.hpp>

namespace eod::engine {

struct EngineConfig {
  double omega1 = 0.5;
  // Unset: resolved at session start to 0.05 times the initial pool's
  // objectness standard deviation.
  std::optional<double> omega2;
  std::size_t k_clusters = 15;
  bool use_refill = true;
  double refill_pct = 0.25;
  double nu = 0.1;
  double expansion_sigma = 100.0;  // RBF width of the one-class model
  std::size_t max_iterations = 100;
  bool use_filter = false;
  bool use_pca = false;
  double pca_variance = 0.95;
  bool use_scene = false;  // object ++ scene features
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const EngineConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
EngineConfig engine_config_from_json(const nlohmann::json& j);

// S2: plain features. S3: + refill. S4: + refill, scene concat.
// S5: + refill, filter. S6: + refill, filter, PCA.
enum class Setting { S2, S3, S4, S5, S6 };

Setting parse_setting(const std::string& name);
std::string to_string(Setting s);
EngineConfig apply_setting(EngineConfig base, Setting s);

}  // namespace eod::engine
