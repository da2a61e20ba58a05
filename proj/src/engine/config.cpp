#include "eod/engine/config.hpp"

#include <cmath>
#include <set>

#include "eod/error.hpp"

namespace eod::engine {

void EngineConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  require(finite(omega1), ErrorCode::invalid_argument, "config: omega1 must be finite");
  require(!omega2 || (finite(*omega2) && *omega2 >= 0), ErrorCode::invalid_argument,
          "config: omega2 must be >= 0");
  require(k_clusters >= 2, ErrorCode::invalid_argument, "config: k_clusters must be >= 2");
  require(finite(refill_pct) && refill_pct >= 0, ErrorCode::invalid_argument,
          "config: refill_pct must be >= 0");
  require(nu > 0 && nu <= 1, ErrorCode::invalid_argument, "config: nu must be in (0, 1]");
  require(finite(expansion_sigma) && expansion_sigma > 0, ErrorCode::invalid_argument,
          "config: expansion_sigma must be positive");
  require(max_iterations >= 1, ErrorCode::invalid_argument, "config: max_iterations must be >= 1");
  require(pca_variance > 0 && pca_variance <= 1, ErrorCode::invalid_argument,
          "config: pca_variance must be in (0, 1]");
}

nlohmann::json to_json(const EngineConfig& c) {
  nlohmann::json j{{"omega1", c.omega1},
                   {"omega2", nullptr},
                   {"k_clusters", c.k_clusters},
                   {"use_refill", c.use_refill},
                   {"refill_pct", c.refill_pct},
                   {"nu", c.nu},
                   {"expansion_sigma", c.expansion_sigma},
                   {"max_iterations", c.max_iterations},
                   {"use_filter", c.use_filter},
                   {"use_pca", c.use_pca},
                   {"pca_variance", c.pca_variance},
                   {"use_scene", c.use_scene},
                   {"seed", c.seed}};
  if (c.omega2) j["omega2"] = *c.omega2;
  return j;
}

EngineConfig engine_config_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::invalid_argument, "config: expected a JSON object");
  static const std::set<std::string> known{
      "omega1",      "omega2",     "k_clusters", "use_refill",   "refill_pct", "nu",       "expansion_sigma",
      "max_iterations", "use_filter", "use_pca", "pca_variance", "use_scene",  "seed"};
  for (const auto& [key, _] : j.items())
    require(known.count(key) > 0, ErrorCode::invalid_argument, "config: unknown key '" + key + "'");
  EngineConfig c;
  try {
    c.omega1 = j.value("omega1", c.omega1);
    if (j.contains("omega2") && !j["omega2"].is_null()) c.omega2 = j["omega2"].get<double>();
    c.k_clusters = j.value("k_clusters", c.k_clusters);
    c.use_refill = j.value("use_refill", c.use_refill);
    c.refill_pct = j.value("refill_pct", c.refill_pct);
    c.nu = j.value("nu", c.nu);
    c.expansion_sigma = j.value("expansion_sigma", c.expansion_sigma);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.use_filter = j.value("use_filter", c.use_filter);
    c.use_pca = j.value("use_pca", c.use_pca);
    c.pca_variance = j.value("pca_variance", c.pca_variance);
    c.use_scene = j.value("use_scene", c.use_scene);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::invalid_argument, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Setting parse_setting(const std::string& name) {
  if (name == "S2") return Setting::S2;
  if (name == "S3") return Setting::S3;
  if (name == "S4") return Setting::S4;
  if (name == "S5") return Setting::S5;
  if (name == "S6") return Setting::S6;
  fail(ErrorCode::invalid_argument, "unknown setting '" + name + "' (expected S2..S6)");
}

std::string to_string(Setting s) {
  switch (s) {
    case Setting::S2: return "S2";
    case Setting::S3: return "S3";
    case Setting::S4: return "S4";
    case Setting::S5: return "S5";
    case Setting::S6: return "S6";
  }
  return "?";
}

EngineConfig apply_setting(EngineConfig base, Setting s) {
  base.use_refill = s != Setting::S2;
  base.use_scene = s == Setting::S4;
  base.use_filter = s == Setting::S5 || s == Setting::S6;
  base.use_pca = s == Setting::S6;
  return base;
}

}  // namespace eod::engine
