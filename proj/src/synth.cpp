#include "eod/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eod/error.hpp"
#include "eod/rng.hpp"

namespace eod {

namespace {

constexpr double kSlotPitch = 200.0;
constexpr double kObjectSide = 100.0;
constexpr double kObjectTop = 10.0;
constexpr double kNoiseTop = 300.0;

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

std::size_t SynthConfig::samples_for(std::size_t cls) const {
  return samples_per_class.size() == 1 ? samples_per_class[0] : samples_per_class.at(cls);
}

double SynthConfig::sigma_for(std::size_t cls) const {
  return class_sigma.size() == 1 ? class_sigma[0] : class_sigma.at(cls);
}

std::string SynthConfig::name_for(std::size_t cls) const {
  return class_names.empty() ? padded("class_", cls, 2) : class_names.at(cls);
}

SynthDataset synth_generate(const SynthConfig& cfg, std::uint64_t seed) {
  require(cfg.dim > 0, ErrorCode::invalid_argument, "synth: dim must be positive");
  require(cfg.n_classes > 0, ErrorCode::invalid_argument, "synth: need at least one class");
  require(cfg.samples_per_class.size() == 1 || cfg.samples_per_class.size() == cfg.n_classes,
          ErrorCode::invalid_argument, "synth: samples_per_class must have 1 or n_classes entries");
  require(cfg.class_sigma.size() == 1 || cfg.class_sigma.size() == cfg.n_classes,
          ErrorCode::invalid_argument, "synth: class_sigma must have 1 or n_classes entries");
  require(cfg.class_names.empty() || cfg.class_names.size() == cfg.n_classes,
          ErrorCode::invalid_argument, "synth: class_names must have n_classes entries");
  require(cfg.centers.empty() || cfg.centers.size() == cfg.n_classes,
          ErrorCode::invalid_argument, "synth: centers must have n_classes entries");
  require(cfg.noise_fraction >= 0 && cfg.noise_fraction < 1, ErrorCode::invalid_argument,
          "synth: noise_fraction must lie in [0, 1)");
  require(cfg.objects_per_image > 0, ErrorCode::invalid_argument,
          "synth: objects_per_image must be positive");
  for (const auto& name : cfg.class_names)
    require(!name.empty() && name != kNoObject, ErrorCode::reserved_name,
            "synth: invalid class name '" + name + "'");

  std::size_t n_objects = 0;
  for (std::size_t c = 0; c < cfg.n_classes; ++c) n_objects += cfg.samples_for(c);
  require(n_objects > 0, ErrorCode::invalid_argument, "synth: zero samples requested");

  Rng rng(seed);

  std::vector<std::vector<double>> centers = cfg.centers;
  if (centers.empty()) {
    centers.assign(cfg.n_classes, std::vector<double>(cfg.dim));
    for (auto& c : centers)
      for (auto& v : c) v = rng.normal(0.0, cfg.center_scale);
  }
  for (const auto& c : centers)
    require(c.size() == cfg.dim, ErrorCode::dimension_mismatch,
            "synth: centre dimension differs from dim");

  // Objects in random order so every image mixes classes.
  std::vector<std::size_t> object_class;
  object_class.reserve(n_objects);
  for (std::size_t c = 0; c < cfg.n_classes; ++c)
    object_class.insert(object_class.end(), cfg.samples_for(c), c);
  rng.shuffle(std::span(object_class));

  const auto n_noise = static_cast<std::size_t>(std::llround(
      cfg.noise_fraction / (1.0 - cfg.noise_fraction) * static_cast<double>(n_objects)));
  const std::size_t n_images =
      (n_objects + cfg.objects_per_image - 1) / cfg.objects_per_image;

  std::vector<std::vector<double>> scenes(n_images);
  if (cfg.scene_dim > 0) {
    for (auto& s : scenes) {
      s.resize(cfg.scene_dim);
      for (auto& v : s) v = rng.normal(0.0, cfg.scene_scale);
    }
  }

  SynthDataset out;
  out.ground_truth.reserve(n_objects);
  out.candidates.reserve(n_objects + n_noise);
  std::vector<std::size_t> noise_per_image(n_images, n_noise / n_images);
  for (std::size_t i = 0; i < n_noise % n_images; ++i) ++noise_per_image[i];

  std::size_t next_object = 0;
  for (std::size_t img = 0; img < n_images; ++img) {
    const std::string image_id = padded("img_", img, 5);
    auto emit = [&](BoundingBox box, std::vector<double> feat, double score) {
      Candidate c;
      c.id = padded("c", out.candidates.size(), 6);
      c.image_id = image_id;
      c.box = box;
      c.objectness = clip01(score);
      c.features = std::move(feat);
      if (cfg.scene_dim > 0) c.scene_features = scenes[img];
      out.candidates.push_back(std::move(c));
    };

    for (std::size_t slot = 0; slot < cfg.objects_per_image && next_object < n_objects; ++slot) {
      const std::size_t cls = object_class[next_object++];
      const BoundingBox gt{kSlotPitch * static_cast<double>(slot) + kObjectTop, kObjectTop,
                           kObjectSide, kObjectSide};
      out.ground_truth.push_back({image_id, gt, cfg.name_for(cls)});
      // Jitter below 10% of the side keeps the overlap above 0.68.
      BoundingBox box = gt;
      box.x += 10.0 * rng.uniform01();
      box.y += 10.0 * rng.uniform01();
      std::vector<double> feat(cfg.dim);
      for (std::size_t d = 0; d < cfg.dim; ++d)
        feat[d] = centers[cls][d] + rng.normal(0.0, cfg.sigma_for(cls));
      emit(box, std::move(feat), rng.normal(cfg.object_score_mean, cfg.object_score_std));
    }

    for (std::size_t k = 0; k < noise_per_image[img]; ++k) {
      // Below every GT slot, so the candidate can never overlap an object.
      const double w = 20.0 + 100.0 * rng.uniform01();
      const double h = 20.0 + 100.0 * rng.uniform01();
      BoundingBox box{800.0 * rng.uniform01(), kNoiseTop + 200.0 * rng.uniform01(), w, h};
      std::vector<double> feat(cfg.dim);
      for (auto& v : feat) v = rng.normal(0.0, cfg.noise_scale);
      emit(box, std::move(feat), rng.normal(cfg.noise_score_mean, cfg.noise_score_std));
    }
  }
  return out;
}

nlohmann::json to_json(const SynthConfig& cfg) {
  nlohmann::json j{{"n_classes", cfg.n_classes},
                   {"samples_per_class", cfg.samples_per_class},
                   {"dim", cfg.dim},
                   {"center_scale", cfg.center_scale},
                   {"class_sigma", cfg.class_sigma},
                   {"noise_fraction", cfg.noise_fraction},
                   {"noise_scale", cfg.noise_scale},
                   {"object_score_mean", cfg.object_score_mean},
                   {"object_score_std", cfg.object_score_std},
                   {"noise_score_mean", cfg.noise_score_mean},
                   {"noise_score_std", cfg.noise_score_std},
                   {"objects_per_image", cfg.objects_per_image},
                   {"scene_dim", cfg.scene_dim},
                   {"scene_scale", cfg.scene_scale}};
  if (!cfg.centers.empty()) j["centers"] = cfg.centers;
  if (!cfg.class_names.empty()) j["class_names"] = cfg.class_names;
  return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end()) it->get_to(field);
    };
    get("n_classes", c.n_classes);
    if (auto it = j.find("samples_per_class"); it != j.end()) {
      if (it->is_array()) it->get_to(c.samples_per_class);
      else c.samples_per_class = {it->get<std::size_t>()};
    }
    get("dim", c.dim);
    get("center_scale", c.center_scale);
    get("centers", c.centers);
    if (auto it = j.find("class_sigma"); it != j.end()) {
      if (it->is_array()) it->get_to(c.class_sigma);
      else c.class_sigma = {it->get<double>()};
    }
    get("noise_fraction", c.noise_fraction);
    get("noise_scale", c.noise_scale);
    get("object_score_mean", c.object_score_mean);
    get("object_score_std", c.object_score_std);
    get("noise_score_mean", c.noise_score_mean);
    get("noise_score_std", c.noise_score_std);
    get("objects_per_image", c.objects_per_image);
    get("scene_dim", c.scene_dim);
    get("scene_scale", c.scene_scale);
    get("class_names", c.class_names);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed synth config: ") + e.what());
  }
  return c;
}

}  // namespace eod
