#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "depthsynth/depth_io.hpp"
#include "depthsynth/samplers.hpp"
#include "depthsynth/synthesis.hpp"
#include "json.hpp"

namespace depthsynth {

inline constexpr int kConfigSchemaVersion = 1;

struct PipelineConfig {
  SynthesisConfig synthesis;
  /// Sparse map k of every label uses samplers[k % samplers.size()].
  std::vector<SamplerSpec> samplers{SamplerSpec::uniform(0.01)};
  std::size_t labels_per_image = 1;   // N
  std::size_t sparse_per_label = 1;   // M
  std::uint64_t global_seed = 0;
  std::size_t workers = 1;
  DepthFormat output_format = DepthFormat::Pfm;
  /// Entries without ground truth are skipped when false.
  bool use_unlabeled = true;

  /// Throws ConfigError.
  void validate() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

nlohmann::json to_json(const SynthesisConfig& cfg);
SynthesisConfig synthesis_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SamplerSpec& spec);
SamplerSpec sampler_spec_from_json(const nlohmann::json& j);

/// Full config including schema_version. Worker count is omitted when
/// with_workers is false so that stored configs do not depend on scheduling.
nlohmann::json to_json(const PipelineConfig& cfg, bool with_workers = true);
/// Missing keys keep their defaults; unknown keys and bad values throw
/// ConfigError naming the key.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig read_pipeline_config(const std::filesystem::path& path);

}  // namespace depthsynth
