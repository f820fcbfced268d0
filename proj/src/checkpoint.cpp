#include "claps/checkpoint.hpp"

#include <fstream>

#include "claps/error.hpp"
#include "claps/report.hpp"

namespace claps::checkpoint {

namespace {

json matrix_to_json(const linalg::DenseMatrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.entries()}};
}

linalg::DenseMatrix matrix_from_json(const json& j) {
  return {j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
          j.at("data").get<std::vector<double>>()};
}

json layer_to_json(const nn::DenseLayer& l) {
  return {{"weight", matrix_to_json(l.weight)}, {"bias", l.bias}};
}

nn::DenseLayer layer_from_json(const json& j) {
  return {matrix_from_json(j.at("weight")), j.at("bias").get<std::vector<double>>()};
}

const char* head_name(nn::HeadSpec::Kind k) {
  switch (k) {
    case nn::HeadSpec::Kind::point: return "point";
    case nn::HeadSpec::Kind::scale: return "scale";
    case nn::HeadSpec::Kind::quantile_pair: return "quantile_pair";
  }
  return "point";
}

nn::HeadSpec::Kind head_kind(const std::string& s) {
  if (s == "point") return nn::HeadSpec::Kind::point;
  if (s == "scale") return nn::HeadSpec::Kind::scale;
  if (s == "quantile_pair") return nn::HeadSpec::Kind::quantile_pair;
  throw Error(ErrorCode::CheckpointInvalid, "unknown head kind '" + s + "'");
}

void expect_format(const json& j, const char* format) {
  if (!j.contains("format") || j.at("format") != format) {
    throw Error(ErrorCode::CheckpointInvalid, std::string("expected format ") + format);
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CheckpointInvalid, path.string() + ": " + e.what());
  }
}

}  // namespace

json backbone_to_json(const nn::TrainedBackbone& m) {
  json hidden = json::array();
  for (const auto& l : m.hidden) hidden.push_back(layer_to_json(l));
  std::vector<int> constant(m.stats.constant.begin(), m.stats.constant.end());
  return {
      {"format", "claps-backbone/1"},
      {"spec",
       {{"input_dim", m.spec.input_dim},
        {"hidden_widths", m.spec.hidden_widths},
        {"activation", "relu"},
        {"feature_map", m.spec.feature_map == nn::FeatureMap::mlp ? "mlp" : "identity"},
        {"head",
         {{"kind", head_name(m.spec.head.kind)},
          {"lo_level", m.spec.head.lo_level},
          {"hi_level", m.spec.head.hi_level}}}}},
      {"hidden", hidden},
      {"head", layer_to_json(m.head)},
      {"stats",
       {{"mean", m.stats.mean},
        {"std", m.stats.std},
        {"constant", constant},
        {"target_center", m.stats.target_center}}},
      {"seed", m.seed},
      {"initial_loss", report::number(m.initial_loss)},
      {"final_loss", report::number(m.final_loss)},
  };
}

nn::TrainedBackbone backbone_from_json(const json& j) {
  expect_format(j, "claps-backbone/1");
  try {
    nn::TrainedBackbone m;
    const auto& spec = j.at("spec");
    m.spec.input_dim = spec.at("input_dim").get<std::size_t>();
    m.spec.hidden_widths = spec.at("hidden_widths").get<std::vector<std::size_t>>();
    m.spec.feature_map =
        spec.at("feature_map").get<std::string>() == "identity" ? nn::FeatureMap::identity
                                                                : nn::FeatureMap::mlp;
    const auto& head = spec.at("head");
    m.spec.head = {head_kind(head.at("kind").get<std::string>()),
                   head.at("lo_level").get<double>(), head.at("hi_level").get<double>()};
    for (const auto& l : j.at("hidden")) m.hidden.push_back(layer_from_json(l));
    m.head = layer_from_json(j.at("head"));
    const auto& stats = j.at("stats");
    m.stats.mean = stats.at("mean").get<std::vector<double>>();
    m.stats.std = stats.at("std").get<std::vector<double>>();
    for (int c : stats.at("constant").get<std::vector<int>>()) m.stats.constant.push_back(c != 0);
    m.stats.target_center = stats.at("target_center").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.initial_loss = report::to_double(j.value("initial_loss", json(0.0)));
    m.final_loss = report::to_double(j.value("final_loss", json(0.0)));
    m.spec.validate();
    if (m.stats.dim() != m.spec.input_dim) {
      throw Error(ErrorCode::CheckpointInvalid, "standardizer width disagrees with input_dim");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CheckpointInvalid, std::string("backbone: ") + e.what());
  }
}

json posterior_to_json(const llla::LaplacePosterior& p) {
  return {
      {"format", "claps-posterior/1"},
      {"w_map", p.w_map},
      {"chol_lower", matrix_to_json(p.chol_precision.lower)},
      {"lambda", p.lambda},
      {"sigma2", p.sigma2},
      {"d", p.d},
      {"n_train", p.n_train},
      {"sigma2_estimator", std::string(llla::to_string(p.sigma2_estimator))},
  };
}

llla::LaplacePosterior posterior_from_json(const json& j) {
  expect_format(j, "claps-posterior/1");
  try {
    llla::LaplacePosterior p;
    p.w_map = j.at("w_map").get<std::vector<double>>();
    p.chol_precision.lower = matrix_from_json(j.at("chol_lower"));
    p.chol_precision.dim = p.chol_precision.lower.rows();
    p.lambda = j.at("lambda").get<double>();
    p.sigma2 = j.at("sigma2").get<double>();
    p.d = j.at("d").get<std::size_t>();
    p.n_train = j.at("n_train").get<std::size_t>();
    p.sigma2_estimator = llla::sigma2_estimator_from_string(j.at("sigma2_estimator").get<std::string>());
    if (p.w_map.size() != p.d || p.chol_precision.dim != p.d ||
        p.chol_precision.lower.cols() != p.d) {
      throw Error(ErrorCode::CheckpointInvalid, "posterior dimensions disagree");
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CheckpointInvalid, std::string("posterior: ") + e.what());
  }
}

void save_model_dir(const std::filesystem::path& dir, const ModelBundle& bundle,
                    const data::Dataset* calibration) {
  std::filesystem::create_directories(dir);
  report::write_text(dir / "backbone.json", backbone_to_json(bundle.backbone).dump());
  report::write_text(dir / "posterior.json", posterior_to_json(bundle.posterior).dump());
  json cal = {{"format", "claps-calibration/1"},
              {"scores", bundle.calibration_scores},
              {"target_cov", bundle.target_cov}};
  report::write_text(dir / "calibration.json", cal.dump());
  if (calibration) data::write_csv(*calibration, dir / "calibration.csv");
}

ModelBundle load_model_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::FileNotFound, "model directory " + dir.string());
  }
  ModelBundle b;
  b.backbone = backbone_from_json(read_json(dir / "backbone.json"));
  b.posterior = posterior_from_json(read_json(dir / "posterior.json"));
  const json cal = read_json(dir / "calibration.json");
  expect_format(cal, "claps-calibration/1");
  try {
    b.calibration_scores = cal.at("scores").get<std::vector<double>>();
    b.target_cov = cal.at("target_cov").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CheckpointInvalid, std::string("calibration: ") + e.what());
  }
  if (b.posterior.d != b.backbone.spec.feature_dim()) {
    throw Error(ErrorCode::CheckpointInvalid, "posterior width disagrees with backbone features");
  }
  return b;
}

}  // namespace claps::checkpoint
