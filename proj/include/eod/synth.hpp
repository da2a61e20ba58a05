#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "eod/dataset.hpp"

namespace eod {

// Planted-class dataset description. Object candidates are drawn from one
// isotropic Gaussian per class; "no_object" candidates from a broad
// zero-centred background Gaussian.
struct SynthConfig {
  std::size_t n_classes = 8;
  // One entry per class, or a single entry applied to every class.
  std::vector<std::size_t> samples_per_class{40};
  std::size_t dim = 16;
  // Centres are drawn from N(0, center_scale^2) per coordinate unless given.
  double center_scale = 100.0;
  std::vector<std::vector<double>> centers;
  // One entry per class, or a single entry applied to every class.
  std::vector<double> class_sigma{20.0};
  double noise_fraction = 0.7;  // fraction of all candidates that are no_object
  double noise_scale = 150.0;
  double object_score_mean = 0.70;
  double object_score_std = 0.10;
  double noise_score_mean = 0.35;
  double noise_score_std = 0.12;
  std::size_t objects_per_image = 4;
  std::size_t scene_dim = 0;  // 0 disables scene features
  double scene_scale = 10.0;
  std::vector<std::string> class_names;  // default class_00, class_01, ...

  std::size_t samples_for(std::size_t cls) const;
  double sigma_for(std::size_t cls) const;
  std::string name_for(std::size_t cls) const;
};

struct SynthDataset {
  std::vector<Candidate> candidates;  // unannotated, as a detector would emit
  std::vector<GroundTruthObject> ground_truth;
};

SynthDataset synth_generate(const SynthConfig& cfg, std::uint64_t seed);

nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace eod
