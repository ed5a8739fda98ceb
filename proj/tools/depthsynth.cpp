// depthsynth command line: synthesize, sample, stats, loss, validate.
//
// Every flag can also be set through DEPTHSYNTH_<FLAG> (upper case, dashes
// as underscores). Precedence: flag, environment, config file, default.
// Exit codes: 0 success, 1 partial failure or violations, 2 invalid input.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "depthsynth/config.hpp"
#include "depthsynth/depth_io.hpp"
#include "depthsynth/diversity.hpp"
#include "depthsynth/error.hpp"
#include "depthsynth/loss.hpp"
#include "depthsynth/manifest.hpp"
#include "depthsynth/pipeline.hpp"
#include "depthsynth/samplers.hpp"
#include "depthsynth/triplet_index.hpp"
#include "depthsynth/validate.hpp"
#include "depthsynth/version.hpp"

namespace ds = depthsynth;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInvalid = 2;

std::string env_name(const std::string& flag) {
  std::string out = "DEPTHSYNTH_";
  for (char c : flag.substr(flag.find_first_not_of('-'))) {
    out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& value, const std::string& help) {
  return app->add_option(name, value, help)->envname(env_name(name));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ds::Error(ds::ErrorCode::IoError, "cannot create " + path.string());
  out << text;
}

ds::DepthUnit unit_for(const std::string& unit, const fs::path& path) {
  if (unit != "auto") return ds::parse_depth_unit(unit);
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png" ? ds::DepthUnit::Millimeters : ds::DepthUnit::Meters;
}

struct SynthesizeArgs {
  std::string manifest, config, out, format, summary;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers, labels, sparse;
  bool quiet = false;
};

int cmd_synthesize(const SynthesizeArgs& a) {
  ds::Manifest manifest;
  ds::PipelineConfig cfg;
  try {
    manifest = ds::read_manifest(a.manifest);
    if (!a.config.empty()) cfg = ds::read_pipeline_config(a.config);
    if (a.seed) cfg.global_seed = *a.seed;
    if (a.workers) cfg.workers = *a.workers;
    if (a.labels) cfg.labels_per_image = *a.labels;
    if (a.sparse) cfg.sparse_per_label = *a.sparse;
    if (!a.format.empty()) cfg.output_format = ds::parse_depth_format(a.format);
    cfg.validate();
  } catch (const ds::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  std::size_t last_decile = 0;
  ds::ProgressFn progress;
  if (!a.quiet) {
    progress = [&](std::size_t done, std::size_t total) {
      const std::size_t decile = total == 0 ? 10 : done * 10 / total;
      if (decile != last_decile || done == total) {
        last_decile = decile;
        std::cerr << "progress " << done << "/" << total << '\n';
      }
    };
  }
  ds::RunSummary s;
  try {
    s = ds::run_synthesize(manifest, a.manifest, cfg, a.out, progress);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartial;
  }
  std::printf("entries %zu processed %zu failed %zu skipped %zu\n", s.entries, s.processed,
              s.failed, s.skipped);
  std::printf("labels %zu sparse_maps %zu warnings %zu\n", s.labels, s.sparse_maps, s.warnings);
  std::printf("seconds %.6f images_per_second %.6f\n", s.seconds, s.images_per_second);
  if (!a.summary.empty()) {
    const nlohmann::json j = {{"entries", s.entries},         {"processed", s.processed},
                              {"failed", s.failed},           {"skipped", s.skipped},
                              {"labels", s.labels},           {"sparse_maps", s.sparse_maps},
                              {"warnings", s.warnings},       {"seconds", s.seconds},
                              {"images_per_second", s.images_per_second}};
    write_text(a.summary, j.dump(2) + "\n");
  }
  return s.failed > 0 ? kExitPartial : kExitOk;
}

struct SampleArgs {
  std::string depth, unit = "auto", pattern = "uniform", image, out, format;
  std::vector<double> intrinsics;
  std::optional<double> rho;
  std::size_t beams = 64;
  double azimuth_res = 0.2;
  std::size_t points = 1500;
  std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& a) {
  ds::DepthMap depth;
  ds::SamplerSpec spec;
  std::optional<ds::CameraIntrinsics> k;
  std::optional<ds::GrayImage> image;
  try {
    depth = ds::read_depth(a.depth, unit_for(a.unit, a.depth));
    if (a.pattern == "uniform") {
      spec = ds::SamplerSpec::uniform(a.rho);
    } else if (a.pattern == "lidar") {
      ds::LidarParams p;
      p.beams = a.beams;
      p.azimuth_resolution_deg = a.azimuth_res;
      spec = {p};
    } else if (a.pattern == "features") {
      spec = ds::SamplerSpec::features(a.points);
    } else {
      throw ds::Error(ds::ErrorCode::ConfigError, "unknown pattern '" + a.pattern + "'");
    }
    spec.validate();
    if (!a.intrinsics.empty()) {
      if (a.intrinsics.size() != 4) {
        throw ds::Error(ds::ErrorCode::ConfigError, "--intrinsics takes fx,fy,cx,cy");
      }
      k = ds::CameraIntrinsics{a.intrinsics[0], a.intrinsics[1], a.intrinsics[2], a.intrinsics[3]};
      k->validate();
    }
    if (!a.image.empty()) image = ds::read_gray_image(a.image);
  } catch (const ds::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  try {
    ds::SeededRng rng(a.seed);
    const ds::SampleResult r = ds::sample(depth, spec, k ? &*k : nullptr, image ? &*image : nullptr, rng);
    if (!a.out.empty()) {
      const fs::path out(a.out);
      const ds::DepthFormat fmt = !a.format.empty()           ? ds::parse_depth_format(a.format)
                                  : unit_for("auto", out) == ds::DepthUnit::Millimeters
                                      ? ds::DepthFormat::Png16
                                      : ds::DepthFormat::Pfm;
      ds::write_depth(r.sparse.to_depth_map(), out, fmt);
    }
    nlohmann::json j = {{"pattern", a.pattern}, {"count", r.sparse.points.size()},
                        {"valid_pixels", depth.valid_count()}, {"seed", a.seed}};
    if (r.rho) j["rho"] = *r.rho;
    std::cout << j.dump() << '\n';
  } catch (const ds::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ds::ErrorCode::IoError ? kExitPartial : kExitInvalid;
  }
  return kExitOk;
}

struct StatsArgs {
  std::string index, manifest, config, stages = "original,interpolation,relocation", out, table;
  std::optional<std::uint64_t> seed;
};

int cmd_stats(const StatsArgs& a) {
  try {
    const std::vector<ds::Stage> stages = ds::parse_stages(a.stages);
    ds::DiversityReport report;
    if (!a.index.empty()) {
      report = ds::run_stats(ds::read_index(a.index), stages);
    } else if (!a.manifest.empty()) {
      ds::PipelineConfig cfg;
      if (!a.config.empty()) cfg = ds::read_pipeline_config(a.config);
      if (a.seed) cfg.global_seed = *a.seed;
      report = ds::run_stats(ds::read_manifest(a.manifest), cfg, stages);
    } else {
      throw ds::Error(ds::ErrorCode::ConfigError, "stats needs --index or --manifest");
    }
    if (!a.out.empty()) write_text(a.out, ds::to_json(report).dump(2) + "\n");
    if (!a.table.empty()) write_text(a.table, ds::to_table(report));
    std::printf("stage\tcount\tspread\n");
    for (const auto& s : report.stages) {
      std::printf("%s\t%zu\t%.17g\n", std::string(ds::to_string(s.stage)).c_str(), s.points.size(),
                  s.spread);
    }
    for (const auto& f : report.failures) {
      std::cerr << "failed entry " << f.entry_index << " (" << f.image_id << "): " << f.message << '\n';
    }
    return report.failures.empty() ? kExitOk : kExitPartial;
  } catch (const ds::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

struct LossArgs {
  std::string pred, label, loss = "g2", pred_unit = "auto", label_unit = "auto",
                            normalization = "per_level";
  int levels = 4;
  double gradient_weight = 0.5;
};

int cmd_loss(const LossArgs& a) {
  try {
    const ds::DepthMap pred = ds::read_depth(a.pred, unit_for(a.pred_unit, a.pred));
    const ds::DepthMap label = ds::read_depth(a.label, unit_for(a.label_unit, a.label));
    nlohmann::json j;
    if (a.loss == "g2") {
      ds::LossOptions opts;
      if (a.normalization == "per_level") {
        opts.normalization = ds::PyramidNormalization::PerLevel;
      } else if (a.normalization == "full_resolution") {
        opts.normalization = ds::PyramidNormalization::FullResolution;
      } else {
        throw ds::Error(ds::ErrorCode::ConfigError, "unknown normalization '" + a.normalization + "'");
      }
      opts.levels = a.levels;
      opts.gradient_weight = a.gradient_weight;
      const ds::LossBreakdown b = ds::g2_loss(pred, label, opts);
      j = {{"loss", "g2"},
           {"standardized_l1", b.standardized_l1},
           {"absolute_l1", b.absolute_l1},
           {"gradient_term", b.gradient_term},
           {"total", b.total},
           {"valid_count", b.valid_count}};
    } else if (a.loss == "l1l2") {
      const ds::L1L2Breakdown b = ds::l1l2_loss(pred, label);
      j = {{"loss", "l1l2"}, {"l1", b.l1}, {"l2", b.l2}, {"total", b.total}, {"valid_count", b.valid_count}};
    } else {
      throw ds::Error(ds::ErrorCode::ConfigError, "unknown loss '" + a.loss + "'");
    }
    std::cout << j.dump() << '\n';
    return kExitOk;
  } catch (const ds::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

struct ValidateArgs {
  std::string index, out;
  std::size_t replay_every = 1;
};

int cmd_validate(const ValidateArgs& a) {
  ds::ValidationReport report;
  try {
    report = ds::run_validate(a.index, {a.replay_every});
  } catch (const ds::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  for (const auto& v : report.violations) {
    std::printf("%s\t%s\t%s\n", v.record_id.c_str(), v.check.c_str(), v.message.c_str());
  }
  std::printf("labels %zu sparse %zu replayed %zu violations %zu\n", report.labels_checked,
              report.sparse_checked, report.labels_replayed, report.violations.size());
  if (!a.out.empty()) write_text(a.out, ds::to_json(report).dump(2) + "\n");
  return report.ok() ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo triplet synthesis for depth completion"};
  app.set_version_flag("--version", std::string(ds::kVersion));
  app.require_subcommand(1);

  SynthesizeArgs syn;
  auto* s = app.add_subcommand("synthesize", "Synthesize labels and sparse maps for a manifest");
  flag(s, "--manifest", syn.manifest, "Manifest JSON")->required();
  flag(s, "--config", syn.config, "Pipeline config JSON");
  flag(s, "--out", syn.out, "Output directory")->required();
  flag(s, "--seed", syn.seed, "Global seed");
  flag(s, "--workers", syn.workers, "Worker threads");
  flag(s, "--labels", syn.labels, "Pseudo labels per image (N)");
  flag(s, "--sparse", syn.sparse, "Sparse maps per label (M)");
  flag(s, "--format", syn.format, "Output format: pfm or png");
  flag(s, "--summary", syn.summary, "Write the run summary as JSON");
  s->add_flag("--quiet", syn.quiet, "No progress output")->envname("DEPTHSYNTH_QUIET");

  SampleArgs smp;
  auto* p = app.add_subcommand("sample", "Sample a sparse map from one depth map");
  flag(p, "--depth", smp.depth, "Depth map (PNG or PFM)")->required();
  flag(p, "--unit", smp.unit, "mm, m or auto (by extension)");
  flag(p, "--pattern", smp.pattern, "uniform, lidar or features");
  flag(p, "--rho", smp.rho, "Uniform fraction; drawn log-uniform when omitted");
  flag(p, "--beams", smp.beams, "LiDAR beams");
  flag(p, "--azimuth-res", smp.azimuth_res, "LiDAR azimuth resolution in degrees");
  flag(p, "--points", smp.points, "Feature points");
  flag(p, "--image", smp.image, "Image for the feature sampler");
  flag(p, "--intrinsics", smp.intrinsics, "fx,fy,cx,cy for the LiDAR sampler")->delimiter(',');
  flag(p, "--seed", smp.seed, "Seed");
  flag(p, "--out", smp.out, "Write the sparse map here");
  flag(p, "--format", smp.format, "pfm or png (default from extension)");

  StatsArgs st;
  auto* t = app.add_subcommand("stats", "Per-stage (mean, std) diversity report");
  flag(t, "--index", st.index, "Triplet index");
  flag(t, "--manifest", st.manifest, "Manifest, used when no index is given");
  flag(t, "--config", st.config, "Pipeline config for --manifest");
  flag(t, "--seed", st.seed, "Global seed for --manifest");
  flag(t, "--stages", st.stages, "Comma separated: original,interpolation,relocation");
  flag(t, "--out", st.out, "JSON report");
  flag(t, "--table", st.table, "Tab separated point table");

  LossArgs ls;
  auto* l = app.add_subcommand("loss", "Evaluate a training loss on a prediction/label pair");
  flag(l, "--pred", ls.pred, "Prediction depth map")->required();
  flag(l, "--label", ls.label, "Label depth map")->required();
  flag(l, "--loss", ls.loss, "g2 or l1l2");
  flag(l, "--pred-unit", ls.pred_unit, "mm, m or auto");
  flag(l, "--label-unit", ls.label_unit, "mm, m or auto");
  flag(l, "--normalization", ls.normalization, "per_level or full_resolution");
  flag(l, "--levels", ls.levels, "Pyramid levels");
  flag(l, "--gradient-weight", ls.gradient_weight, "Weight of the gradient term");

  ValidateArgs va;
  auto* v = app.add_subcommand("validate", "Re-check a triplet index");
  flag(v, "--index", va.index, "Triplet index")->required();
  flag(v, "--replay-every", va.replay_every, "Replay every k-th label (0: never)");
  flag(v, "--out", va.out, "JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (s->parsed()) return cmd_synthesize(syn);
    if (p->parsed()) return cmd_sample(smp);
    if (t->parsed()) return cmd_stats(st);
    if (l->parsed()) return cmd_loss(ls);
    if (v->parsed()) return cmd_validate(va);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartial;
  }
  return kExitInvalid;
}
