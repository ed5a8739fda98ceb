#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string_view>

#include "depthsynth/config.hpp"
#include "depthsynth/manifest.hpp"
#include "depthsynth/samplers.hpp"
#include "depthsynth/synthesis.hpp"

namespace depthsynth {

std::uint64_t label_seed(std::uint64_t global_seed, std::string_view image_id,
                         std::size_t label_index) noexcept;
std::uint64_t sparse_seed(std::uint64_t label_seed, std::size_t sparse_index) noexcept;

/// Label j of an entry as it will be stored: synthesized, then quantized to
/// the configured output format so that sparse values match the file.
SynthesisResult synthesize_entry_label(const ManifestEntry& entry, const EntryData& data,
                                       const PipelineConfig& cfg, std::uint64_t seed);

/// Sparse map k of a stored label.
SampleResult sample_entry_sparse(const DepthMap& label, const ManifestEntry& entry,
                                 const EntryData& data, const PipelineConfig& cfg,
                                 std::uint64_t seed, std::size_t sparse_index);

bool config_needs_image(const PipelineConfig& cfg);

std::string label_file_name(std::size_t entry_index, std::size_t label_index, DepthFormat format);
std::string sparse_file_name(std::size_t entry_index, std::size_t label_index,
                             std::size_t sparse_index, DepthFormat format);

struct RunSummary {
  std::size_t entries = 0;
  std::size_t processed = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  std::size_t labels = 0;
  std::size_t sparse_maps = 0;
  std::size_t warnings = 0;
  double seconds = 0.0;
  /// processed / seconds
  double images_per_second = 0.0;
};

/// Called after every finished entry with (finished, total).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/// Writes labels/, sparse/ and the triplet index into out_dir. Entries that
/// fail are recorded in the index and skipped; problems with the output
/// directory itself throw.
RunSummary run_synthesize(const Manifest& manifest, const std::filesystem::path& manifest_path,
                          const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                          const ProgressFn& progress = {});

}  // namespace depthsynth
