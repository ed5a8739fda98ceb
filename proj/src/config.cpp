#include "depthsynth/config.hpp"

#include <fstream>
#include <string>

#include "depthsynth/error.hpp"

namespace depthsynth {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "config key '" + key + "': " + what);
}

void only_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) bad(where, "must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
  }
}

std::string key_path(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

double get_double(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number()) bad(key_path(where, key), "must be a number");
  return v.get<double>();
}

std::uint64_t get_count(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    bad(key_path(where, key), "must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_boolean()) bad(key_path(where, key), "must be true or false");
  return v.get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_string()) bad(key_path(where, key), "must be a string");
  return v.get<std::string>();
}

std::pair<double, double> get_range(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    bad(key_path(where, key), "must be a [min, max] pair of numbers");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

template <typename Fn>
auto parse_enum(const json& j, const char* key, const std::string& where, Fn&& fn) {
  const std::string text = get_string(j, key, where);
  try {
    return fn(text);
  } catch (const Error& e) {
    bad(key_path(where, key), e.what());
  }
}

}  // namespace

void PipelineConfig::validate() const {
  synthesis.validate();
  if (labels_per_image < 1) throw Error(ErrorCode::ConfigError, "labels_per_image must be >= 1");
  if (sparse_per_label < 1) throw Error(ErrorCode::ConfigError, "sparse_per_label must be >= 1");
  if (workers < 1) throw Error(ErrorCode::ConfigError, "workers must be >= 1");
  if (samplers.empty()) throw Error(ErrorCode::ConfigError, "at least one sampler is required");
  for (const auto& s : samplers) s.validate();
}

json to_json(const SynthesisConfig& cfg) {
  json j = {{"models", cfg.models},
            {"p_interpolation", cfg.p_interpolation},
            {"relocation", cfg.relocation},
            {"theta_range", {cfg.theta_min, cfg.theta_max}},
            {"relative_alignment", std::string(to_string(cfg.relative_alignment))},
            {"metric_alignment", std::string(to_string(cfg.metric_alignment))}};
  if (cfg.depth_max) j["depth_max"] = *cfg.depth_max;
  return j;
}

SynthesisConfig synthesis_config_from_json(const json& j) {
  const std::string where = "synthesis";
  only_keys(j,
            {"models", "p_interpolation", "relocation", "theta_range", "relative_alignment",
             "metric_alignment", "depth_max"},
            where);
  SynthesisConfig cfg;
  if (j.contains("models")) {
    const json& m = j.at("models");
    if (!m.is_array()) bad(where + ".models", "must be an array of model ids");
    for (const auto& id : m) {
      if (!id.is_string()) bad(where + ".models", "must be an array of model ids");
      cfg.models.push_back(id.get<std::string>());
    }
  }
  if (j.contains("p_interpolation")) cfg.p_interpolation = get_double(j, "p_interpolation", where);
  if (j.contains("relocation")) cfg.relocation = get_bool(j, "relocation", where);
  if (j.contains("theta_range")) {
    std::tie(cfg.theta_min, cfg.theta_max) = get_range(j, "theta_range", where);
  }
  if (j.contains("relative_alignment")) {
    cfg.relative_alignment = parse_enum(j, "relative_alignment", where, parse_alignment_mode);
  }
  if (j.contains("metric_alignment")) {
    cfg.metric_alignment = parse_enum(j, "metric_alignment", where, parse_alignment_mode);
  }
  if (j.contains("depth_max")) cfg.depth_max = get_double(j, "depth_max", where);
  return cfg;
}

json to_json(const SamplerSpec& spec) {
  json j = {{"kind", std::string(to_string(spec.kind()))}};
  if (const auto* u = std::get_if<UniformParams>(&spec.params)) {
    if (u->rho) j["rho"] = *u->rho;
    j["rho_range"] = {u->rho_min, u->rho_max};
  } else if (const auto* l = std::get_if<LidarParams>(&spec.params)) {
    j["beams"] = l->beams;
    j["azimuth_resolution_deg"] = l->azimuth_resolution_deg;
    if (l->elevation_min_deg) {
      j["elevation_range_deg"] = {*l->elevation_min_deg, *l->elevation_max_deg};
    }
    j["percentiles"] = {l->percentile_low, l->percentile_high};
  } else {
    const auto& f = std::get<FeatureParams>(spec.params);
    j["points"] = f.points;
    j["nms_radius"] = f.nms_radius;
    j["sigma"] = f.sigma;
    j["harris_k"] = f.harris_k;
    j["response_threshold"] = f.response_threshold;
  }
  return j;
}

SamplerSpec sampler_spec_from_json(const json& j) {
  const std::string where = "sampler";
  if (!j.is_object() || !j.contains("kind")) bad(where + ".kind", "missing sampler kind");
  const std::string kind = get_string(j, "kind", where);
  SamplerSpec spec;
  if (kind == "uniform") {
    only_keys(j, {"kind", "rho", "rho_range"}, where);
    UniformParams p;
    if (j.contains("rho")) p.rho = get_double(j, "rho", where);
    if (j.contains("rho_range")) std::tie(p.rho_min, p.rho_max) = get_range(j, "rho_range", where);
    spec.params = p;
  } else if (kind == "lidar") {
    only_keys(j, {"kind", "beams", "azimuth_resolution_deg", "elevation_range_deg", "percentiles"},
              where);
    LidarParams p;
    if (j.contains("beams")) p.beams = get_count(j, "beams", where);
    if (j.contains("azimuth_resolution_deg")) {
      p.azimuth_resolution_deg = get_double(j, "azimuth_resolution_deg", where);
    }
    if (j.contains("elevation_range_deg")) {
      const auto [lo, hi] = get_range(j, "elevation_range_deg", where);
      p.elevation_min_deg = lo;
      p.elevation_max_deg = hi;
    }
    if (j.contains("percentiles")) {
      std::tie(p.percentile_low, p.percentile_high) = get_range(j, "percentiles", where);
    }
    spec.params = p;
  } else if (kind == "features") {
    only_keys(j, {"kind", "points", "nms_radius", "sigma", "harris_k", "response_threshold"},
              where);
    FeatureParams p;
    if (j.contains("points")) p.points = get_count(j, "points", where);
    if (j.contains("nms_radius")) p.nms_radius = get_count(j, "nms_radius", where);
    if (j.contains("sigma")) p.sigma = get_double(j, "sigma", where);
    if (j.contains("harris_k")) p.harris_k = get_double(j, "harris_k", where);
    if (j.contains("response_threshold")) {
      p.response_threshold = get_double(j, "response_threshold", where);
    }
    spec.params = p;
  } else {
    bad(where + ".kind", "unknown sampler kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

json to_json(const PipelineConfig& cfg, bool with_workers) {
  json samplers = json::array();
  for (const auto& s : cfg.samplers) samplers.push_back(to_json(s));
  json j = {{"schema_version", kConfigSchemaVersion},
            {"synthesis", to_json(cfg.synthesis)},
            {"samplers", std::move(samplers)},
            {"labels_per_image", cfg.labels_per_image},
            {"sparse_per_label", cfg.sparse_per_label},
            {"seed", cfg.global_seed},
            {"output_format", std::string(to_string(cfg.output_format))},
            {"use_unlabeled", cfg.use_unlabeled}};
  if (with_workers) j["workers"] = cfg.workers;
  return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  only_keys(j,
            {"schema_version", "synthesis", "samplers", "labels_per_image", "sparse_per_label",
             "seed", "workers", "output_format", "use_unlabeled"},
            "");
  if (j.contains("schema_version") &&
      (!j.at("schema_version").is_number_integer() ||
       j.at("schema_version").get<long long>() != kConfigSchemaVersion)) {
    bad("schema_version", "unsupported (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }
  PipelineConfig cfg;
  if (j.contains("synthesis")) cfg.synthesis = synthesis_config_from_json(j.at("synthesis"));
  if (j.contains("samplers")) {
    const json& s = j.at("samplers");
    if (!s.is_array()) bad("samplers", "must be an array");
    cfg.samplers.clear();
    for (const auto& spec : s) cfg.samplers.push_back(sampler_spec_from_json(spec));
  }
  if (j.contains("labels_per_image")) cfg.labels_per_image = get_count(j, "labels_per_image", "");
  if (j.contains("sparse_per_label")) cfg.sparse_per_label = get_count(j, "sparse_per_label", "");
  if (j.contains("seed")) cfg.global_seed = get_count(j, "seed", "");
  if (j.contains("workers")) cfg.workers = get_count(j, "workers", "");
  if (j.contains("output_format")) {
    cfg.output_format = parse_enum(j, "output_format", "", parse_depth_format);
  }
  if (j.contains("use_unlabeled")) cfg.use_unlabeled = get_bool(j, "use_unlabeled", "");
  cfg.validate();
  return cfg;
}

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": invalid JSON: " + e.what());
  }
  return pipeline_config_from_json(j);
}

}  // namespace depthsynth
