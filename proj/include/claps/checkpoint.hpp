#pragma once

// Lossless JSON checkpoints for a trained backbone and its Laplace head.
// Doubles are written in shortest round-trip form, so reloading reproduces
// every weight bit for bit.
//
// A model directory contains:
//   backbone.json     {"format": "claps-backbone/1", spec, hidden, head, stats, seed}
//   posterior.json    {"format": "claps-posterior/1", w_map, chol_lower, lambda, sigma2, ...}
//   calibration.json  {"format": "claps-calibration/1", scores, target_cov}
//   calibration.csv   the calibration split (raw features + y)

#include <filesystem>
#include <vector>

#include "claps/backbone.hpp"
#include "claps/llla.hpp"
#include "json.hpp"

namespace claps::checkpoint {

using nlohmann::json;

json backbone_to_json(const nn::TrainedBackbone& m);
nn::TrainedBackbone backbone_from_json(const json& j);

json posterior_to_json(const llla::LaplacePosterior& p);
llla::LaplacePosterior posterior_from_json(const json& j);

struct ModelBundle {
  nn::TrainedBackbone backbone;
  llla::LaplacePosterior posterior;
  std::vector<double> calibration_scores;
  double target_cov = 0.9;
};

void save_model_dir(const std::filesystem::path& dir, const ModelBundle& bundle,
                    const data::Dataset* calibration = nullptr);
/// Throws FileNotFound for a missing directory/file, CheckpointInvalid for
/// malformed content.
ModelBundle load_model_dir(const std::filesystem::path& dir);

}  // namespace claps::checkpoint
