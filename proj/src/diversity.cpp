#include "depthsynth/diversity.hpp"

#include <algorithm>
#include <sstream>

#include "depthsynth/error.hpp"
#include "depthsynth/pipeline.hpp"

namespace depthsynth {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Original: return "original";
    case Stage::Interpolation: return "interpolation";
    case Stage::Relocation: return "relocation";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  if (text == "original") return Stage::Original;
  if (text == "interpolation") return Stage::Interpolation;
  if (text == "relocation") return Stage::Relocation;
  throw Error(ErrorCode::ConfigError, "unknown stage '" + std::string(text) +
                                          "' (expected original, interpolation or relocation)");
}

std::vector<Stage> parse_stages(std::string_view text) {
  std::vector<Stage> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(parse_stage(item));
    pos = comma + 1;
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "no stages given");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double spread_metric(std::span<const ImageStats> stats) {
  const std::size_t n = stats.size();
  if (n < 2) return 0.0;
  double mean_m = 0.0, mean_s = 0.0;
  for (const auto& s : stats) {
    mean_m += s.mean;
    mean_s += s.std;
  }
  mean_m /= static_cast<double>(n);
  mean_s /= static_cast<double>(n);
  double mm = 0.0, ss = 0.0, ms = 0.0;
  for (const auto& s : stats) {
    const double a = s.mean - mean_m;
    const double b = s.std - mean_s;
    mm += a * a;
    ss += b * b;
    ms += a * b;
  }
  const double d = static_cast<double>(n - 1);
  return std::max(0.0, (mm / d) * (ss / d) - (ms / d) * (ms / d));
}

DiversityReport run_stats(const Manifest& manifest, const PipelineConfig& cfg,
                          std::span<const Stage> stages) {
  cfg.validate();
  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyDataset, "manifest has no entries");
  auto wants = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };

  DiversityReport report;
  for (Stage s : {Stage::Original, Stage::Interpolation, Stage::Relocation}) {
    if (wants(s)) report.stages.push_back({s, {}, 0.0});
  }
  if (report.stages.empty()) throw Error(ErrorCode::ConfigError, "no stages requested");
  auto stage_report = [&](Stage s) -> StageReport* {
    for (auto& r : report.stages) {
      if (r.stage == s) return &r;
    }
    return nullptr;
  };

  SynthesisConfig mixing = cfg.synthesis;
  mixing.relocation = false;
  SynthesisConfig relocating = cfg.synthesis;
  relocating.relocation = true;

  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const ManifestEntry& entry = manifest.entries[i];
    if (!entry.labeled() && !cfg.use_unlabeled) continue;
    try {
      const EntryData data = load_entry(manifest, entry, false);
      const DepthMap* gt = data.gt ? &*data.gt : nullptr;
      std::vector<std::pair<Stage, StagePoint>> points;
      if (gt != nullptr && wants(Stage::Original)) {
        points.push_back({Stage::Original, {i, entry.id, 0, image_stats(*gt)}});
      }
      for (std::size_t j = 0; j < cfg.labels_per_image; ++j) {
        const std::uint64_t seed = label_seed(cfg.global_seed, entry.id, j);
        if (wants(Stage::Interpolation)) {
          const auto r = synthesize_label(entry.id, gt, data.predictions, mixing, seed);
          points.push_back({Stage::Interpolation, {i, entry.id, j, image_stats(r.label)}});
        }
        if (wants(Stage::Relocation)) {
          const auto r = synthesize_label(entry.id, gt, data.predictions, relocating, seed);
          points.push_back({Stage::Relocation, {i, entry.id, j, image_stats(r.label)}});
        }
      }
      for (auto& [stage, point] : points) stage_report(stage)->points.push_back(std::move(point));
    } catch (const Error& e) {
      report.failures.push_back({i, entry.id, e.what()});
    }
  }

  bool any = false;
  for (auto& r : report.stages) {
    std::vector<ImageStats> stats;
    stats.reserve(r.points.size());
    for (const auto& p : r.points) stats.push_back(p.stats);
    r.spread = spread_metric(stats);
    any = any || !r.points.empty();
  }
  if (!any) throw Error(ErrorCode::EmptyDataset, "no entry produced statistics");
  return report;
}

DiversityReport run_stats(const TripletIndex& index, std::span<const Stage> stages) {
  const Manifest manifest = read_manifest(index.header.manifest, false);
  return run_stats(manifest, index.header.config, stages);
}

nlohmann::json to_json(const DiversityReport& report) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& r : report.stages) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points) {
      points.push_back({{"entry_index", p.entry_index},
                        {"image_id", p.image_id},
                        {"label_index", p.label_index},
                        {"mean", p.stats.mean},
                        {"std", p.stats.std},
                        {"valid_count", p.stats.valid_count}});
    }
    stages.push_back({{"stage", std::string(to_string(r.stage))},
                      {"count", r.points.size()},
                      {"spread", r.spread},
                      {"points", std::move(points)}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures) {
    failures.push_back(
        {{"entry_index", f.entry_index}, {"image_id", f.image_id}, {"message", f.message}});
  }
  return {{"stages", std::move(stages)}, {"failures", std::move(failures)}};
}

std::string to_table(const DiversityReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "stage\tentry_index\timage_id\tlabel_index\tmean\tstd\n";
  for (const auto& r : report.stages) {
    for (const auto& p : r.points) {
      out << to_string(r.stage) << '\t' << p.entry_index << '\t' << p.image_id << '\t'
          << p.label_index << '\t' << p.stats.mean << '\t' << p.stats.std << '\n';
    }
  }
  return out.str();
}

}  // namespace depthsynth
