#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "depthsynth/config.hpp"
#include "depthsynth/depth_stats.hpp"
#include "depthsynth/manifest.hpp"
#include "depthsynth/triplet_index.hpp"
#include "json.hpp"

namespace depthsynth {

/// Original: ground truth only. Interpolation: mixed labels with relocation
/// off. Relocation: mixed and relocated labels. Both synthetic stages use the
/// pipeline's seeds, so they differ only by theta.
enum class Stage { Original, Interpolation, Relocation };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);
/// Comma separated list, returned in pipeline order without duplicates.
std::vector<Stage> parse_stages(std::string_view text);

struct StagePoint {
  std::size_t entry_index = 0;
  std::string image_id;
  std::size_t label_index = 0;
  ImageStats stats;
};

struct StageReport {
  Stage stage = Stage::Original;
  std::vector<StagePoint> points;
  double spread = 0.0;
};

struct StatsFailure {
  std::size_t entry_index = 0;
  std::string image_id;
  std::string message;
};

struct DiversityReport {
  std::vector<StageReport> stages;
  std::vector<StatsFailure> failures;
};

/// Determinant of the sample covariance (n - 1 denominator) of the
/// (mean, std) pairs; 0 for fewer than two points.
double spread_metric(std::span<const ImageStats> stats);

/// Throws EmptyDataset when the manifest has no usable entry.
DiversityReport run_stats(const Manifest& manifest, const PipelineConfig& cfg,
                          std::span<const Stage> stages);
/// Uses the manifest and configuration recorded in the index header.
DiversityReport run_stats(const TripletIndex& index, std::span<const Stage> stages);

nlohmann::json to_json(const DiversityReport& report);
/// One row per point: stage, entry, image id, label index, mean, std.
std::string to_table(const DiversityReport& report);

}  // namespace depthsynth
