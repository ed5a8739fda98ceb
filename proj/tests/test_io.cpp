#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "depthsynth/config.hpp"
#include "depthsynth/depth_io.hpp"
#include "depthsynth/error.hpp"
#include "depthsynth/manifest.hpp"
#include "depthsynth/rng.hpp"
#include "depthsynth/triplet_index.hpp"
#include "doctest.h"
#include "temp_dir.hpp"

using namespace depthsynth;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::IoError;
}

// 16-bit gray PNG written straight through libpng.
void write_raw_png16(const fs::path& path, std::size_t w, std::size_t h,
                     const std::vector<std::uint16_t>& raw) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_LINEAR_Y;
  REQUIRE(png_image_write_to_file(&img, path.c_str(), 0, raw.data(), 0, nullptr) != 0);
}

void write_raw_pfm(const fs::path& path, std::size_t w, std::size_t h, const std::vector<float>& top_down) {
  std::ofstream out(path, std::ios::binary);
  out << "Pf\n" << w << " " << h << "\n-1.0\n";
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t y = h - 1 - row;
    out.write(reinterpret_cast<const char*>(&top_down[y * w]), static_cast<std::streamsize>(w * 4));
  }
}

DepthMap random_map(std::uint64_t seed, std::size_t w, std::size_t h, double max_depth = 60.0) {
  SeededRng rng(seed);
  std::vector<double> v(w * h);
  for (auto& x : v) x = rng.uniform() < 0.1 ? 0.0 : 0.01 + max_depth * rng.uniform();
  return DepthMap::from_values(w, h, std::move(v));
}

nlohmann::json minimal_manifest() {
  return nlohmann::json::parse(R"({
    "schema_version": 1,
    "entries": [
      {"image": "a.png", "depth": "a_depth.png",
       "intrinsics": {"fx": 500, "fy": 500, "cx": 320, "cy": 240}}
    ]})");
}

}  // namespace

TEST_CASE("PNG millimeters") {
  TempDir dir;
  write_raw_png16(dir / "d.png", 3, 1, {5000, 0, 65535});
  const DepthMap d = read_depth(dir / "d.png", DepthUnit::Millimeters);
  CHECK(d.value(0) == 5.0);
  CHECK_FALSE(d.is_valid(1));
  CHECK(d.value(2) == 65.535);
  const DepthMap m = read_depth(dir / "d.png", DepthUnit::Meters);
  CHECK(m.value(0) == 5000.0);
}

TEST_CASE("PFM sentinels") {
  TempDir dir;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  write_raw_pfm(dir / "d.pfm", 2, 2, {1.5f, nan, -3.0f, 2.25f});
  const DepthMap d = read_depth(dir / "d.pfm");
  CHECK(d.value(0) == 1.5);
  CHECK_FALSE(d.is_valid(1));
  CHECK_FALSE(d.is_valid(2));
  CHECK(d.value(3) == 2.25);
}

TEST_CASE("round trips") {
  TempDir dir;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DepthMap d = random_map(seed, 37, 23);
    const DepthMap f = quantize_for(d, DepthFormat::Pfm);
    write_depth(f, dir / "x.pfm", DepthFormat::Pfm);
    CHECK(read_depth(dir / "x.pfm") == f);
    // Float32 storage: a value already representable survives unchanged.
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.is_valid(i)) CHECK(std::abs(f.value(i) - d.value(i)) <= 1e-6 * d.value(i));
    }

    write_depth(d, dir / "x.png", DepthFormat::Png16);
    const DepthMap p = read_depth(dir / "x.png", DepthUnit::Millimeters);
    CHECK(p == quantize_for(d, DepthFormat::Png16));
    for (std::size_t i = 0; i < d.size(); ++i) {
      REQUIRE(p.is_valid(i) == d.is_valid(i));
      if (d.is_valid(i)) CHECK(std::abs(p.value(i) - d.value(i)) <= 0.0005 + 1e-12);
    }
  }
}

TEST_CASE("write errors") {
  TempDir dir;
  const DepthMap far = DepthMap::from_values(2, 1, {1.0, 70.0});
  try {
    write_depth(far, dir / "far.png", DepthFormat::Png16);
    FAIL("expected RangeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RangeError);
    CHECK(std::string(e.what()).find("PFM") != std::string::npos);
  }
  CHECK(code_of([&] { write_depth(DepthMap(), dir / "e.pfm", DepthFormat::Pfm); }) == ErrorCode::ShapeError);
}

TEST_CASE("read errors") {
  TempDir dir;
  {
    std::ofstream(dir / "junk.bin") << "hello world, not a depth map";
  }
  CHECK(code_of([&] { read_depth(dir / "junk.bin"); }) == ErrorCode::FormatError);
  CHECK(code_of([&] { read_depth(dir / "missing.png"); }) == ErrorCode::IoError);

  write_depth(random_map(1, 20, 20), dir / "t.pfm", DepthFormat::Pfm);
  write_depth(random_map(1, 20, 20), dir / "t.png", DepthFormat::Png16);
  for (const char* name : {"t.pfm", "t.png"}) {
    const fs::path p = dir / name;
    fs::resize_file(p, fs::file_size(p) - 40);
    CHECK(code_of([&] { read_depth(p); }) == ErrorCode::CorruptFile);
  }
  {
    std::ofstream(dir / "rgb.pfm") << "PF\n1 1\n-1.0\n";
  }
  CHECK(code_of([&] { read_depth(dir / "rgb.pfm"); }) == ErrorCode::FormatError);
}

TEST_CASE("gray images") {
  TempDir dir;
  GrayImage img{4, 2, {0.0, 0.25, 0.5, 1.0, 1.0, 0.5, 0.25, 0.0}};
  write_gray_image(img, dir / "g.png");
  const GrayImage back = read_gray_image(dir / "g.png");
  REQUIRE(back.width == 4);
  REQUIRE(back.height == 2);
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 0.5 / 255.0);
}

TEST_CASE("manifest schema") {
  const Manifest m = parse_manifest(minimal_manifest(), "/data", false);
  REQUIRE(m.entries.size() == 1);
  CHECK(m.entries[0].id == "a.png");
  CHECK(m.entries[0].labeled());
  CHECK(m.entries[0].depth_unit == DepthUnit::Millimeters);
  CHECK(m.resolve("a.png") == fs::path("/data/a.png"));

  auto missing = minimal_manifest();
  missing["entries"][0].erase("intrinsics");
  try {
    parse_manifest(missing, ".", false);
    FAIL("expected ManifestError");
  } catch (const ManifestError& e) {
    CHECK(e.entry_index() == 0u);
    CHECK(e.field() == "intrinsics");
    CHECK(std::string(e.what()).find("intrinsics") != std::string::npos);
  }

  auto unlabeled = minimal_manifest();
  unlabeled["entries"][0].erase("depth");
  CHECK(code_of([&] { parse_manifest(unlabeled, ".", false); }) == ErrorCode::ManifestError);
  unlabeled["entries"][0]["predictions"] = {{{"model_id", "m"}, {"path", "m.pfm"}, {"scale_kind", "metric"}}};
  CHECK_FALSE(parse_manifest(unlabeled, ".", false).entries[0].labeled());

  auto unknown = minimal_manifest();
  unknown["entries"][0]["colour"] = 1;
  CHECK(code_of([&] { parse_manifest(unknown, ".", false); }) == ErrorCode::ManifestError);

  auto dup = minimal_manifest();
  dup["entries"].push_back(dup["entries"][0]);
  CHECK(code_of([&] { parse_manifest(dup, ".", false); }) == ErrorCode::ManifestError);

  auto version = minimal_manifest();
  version["schema_version"] = 2;
  CHECK(code_of([&] { parse_manifest(version, ".", false); }) == ErrorCode::ManifestError);

  CHECK(code_of([&] { parse_manifest(minimal_manifest(), "/nonexistent", true); }) ==
        ErrorCode::ManifestError);

  for (const char* bad : {"[]", R"({"schema_version":1,"entries":[5]})",
                          R"({"schema_version":1,"entries":[{"image":"a","intrinsics":{"fx":-1,"fy":1,"cx":0,"cy":0},"depth":"d"}]})",
                          R"({"schema_version":1,"entries":[{"image":"a","intrinsics":{"fx":1,"fy":1,"cx":0,"cy":0},"predictions":[{"model_id":"m","path":"p"}]}]})"}) {
    CHECK(code_of([&] { parse_manifest(nlohmann::json::parse(bad), ".", false); }) ==
          ErrorCode::ManifestError);
  }
}

TEST_CASE("manifest round trip") {
  TempDir dir;
  Manifest m;
  m.base_dir = dir.path();
  ManifestEntry e;
  e.id = "one";
  e.image_path = "img/1.png";
  e.depth_path = "d/1.png";
  e.intrinsics = {525.5, 520.25, 319.5, 239.5};
  e.predictions.push_back({"net", "p/1.pfm", ScaleKind::Relative, DepthUnit::Meters, AlignmentMode::MedianScale});
  m.entries.push_back(e);
  ManifestEntry u;
  u.id = "two";
  u.image_path = "img/2.png";
  u.intrinsics = {100, 100, 50, 50};
  u.predictions.push_back({"net", "p/2.png", ScaleKind::Metric, DepthUnit::Millimeters, std::nullopt});
  m.entries.push_back(u);
  write_manifest(m, dir / "m.json");
  const Manifest back = read_manifest(dir / "m.json", false);
  CHECK(back == m);
  CHECK(back.base_dir == dir.path());
  {
    std::ofstream(dir / "broken.json") << "{\"schema_version\": 1, ";
  }
  CHECK(code_of([&] { read_manifest(dir / "broken.json", false); }) == ErrorCode::ManifestError);
}

TEST_CASE("pipeline config") {
  PipelineConfig cfg;
  cfg.synthesis.models = {"a", "b"};
  cfg.synthesis.p_interpolation = 0.7;
  cfg.synthesis.theta_min = 0.25;
  cfg.synthesis.depth_max = 80.0;
  cfg.samplers = {SamplerSpec::uniform(std::nullopt), SamplerSpec::lidar(16), SamplerSpec::features(500)};
  cfg.labels_per_image = 3;
  cfg.sparse_per_label = 4;
  cfg.global_seed = 0xFFFFFFFFFFFFFFFFull;
  cfg.workers = 6;
  cfg.output_format = DepthFormat::Png16;
  cfg.use_unlabeled = false;
  CHECK(pipeline_config_from_json(to_json(cfg)) == cfg);

  PipelineConfig no_workers = pipeline_config_from_json(to_json(cfg, false));
  CHECK(no_workers.workers == 1);

  for (const char* bad :
       {R"({"labels_per_image": 0})", R"({"colour": 1})", R"({"synthesis": {"theta_range": [2, 1]}})",
        R"({"samplers": [{"kind": "radar"}]})", R"({"samplers": [{"kind": "uniform", "rho": 0}]})",
        R"({"samplers": []})", R"({"output_format": "exr"})", R"({"schema_version": 9})",
        R"({"synthesis": {"p_interpolation": 1.5}})", R"({"seed": -1})"}) {
    CHECK(code_of([&] { pipeline_config_from_json(nlohmann::json::parse(bad)); }) == ErrorCode::ConfigError);
  }
  try {
    pipeline_config_from_json(nlohmann::json::parse(R"({"synthesis": {"relocaton": false}})"));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("synthesis.relocaton") != std::string::npos);
  }
}

TEST_CASE("triplet index writer orders entries") {
  TempDir dir;
  IndexHeader header;
  header.tool_version = "t";
  header.manifest = "/m.json";
  header.entry_count = 3;
  {
    IndexWriter w(dir / "index.jsonl", header);
    SparseRecord s;
    s.id = sparse_record_id(2, 0, 0);
    s.label_id = label_record_id(2, 0);
    s.entry_index = 2;
    s.sampler = SamplerSpec::uniform(0.5);
    s.rho = 0.5;
    s.seed = 0xFFFFFFFFFFFFFFF1ull;
    s.count = 3;
    w.commit(2, {s});
    w.commit(0, {EntryOutcome{0, "zero", EntryOutcome::Status::Skipped, "", "why"}});
    LabelRecord l;
    l.id = label_record_id(1, 0);
    l.entry_index = 1;
    l.provenance.image_id = "one";
    l.provenance.seed = 42;
    l.provenance.labeled = true;
    l.provenance.model_ids = {"m"};
    l.provenance.weights.lambdas = {0.1 + 0.2};
    l.provenance.alignment = {{"m", AlignmentMode::AffineLsq, AlignmentMode::MedianScale, 1.0 / 3.0,
                               -0.0, true, "gt"}};
    l.provenance.theta.theta = 1.2345678901234567;
    l.provenance.warnings = {"w"};
    w.commit(1, {l});
    w.finish(3);
  }
  const TripletIndex idx = read_index(dir / "index.jsonl");
  CHECK(idx.header.manifest == "/m.json");
  REQUIRE(idx.records.size() == 3);
  CHECK(std::holds_alternative<EntryOutcome>(idx.records[0]));
  const auto& l = std::get<LabelRecord>(idx.records[1]);
  CHECK(l.id == "e000001.l0");
  CHECK(l.provenance.weights.lambdas[0] == 0.1 + 0.2);
  CHECK(l.provenance.alignment[0].scale == 1.0 / 3.0);
  CHECK(l.provenance.theta.theta == 1.2345678901234567);
  const auto& s = std::get<SparseRecord>(idx.records[2]);
  CHECK(s.seed == 0xFFFFFFFFFFFFFFF1ull);
  CHECK(s.sampler == SamplerSpec::uniform(0.5));

  IndexWriter partial(dir / "p.jsonl", header);
  partial.commit(1, {});
  CHECK(code_of([&] { partial.finish(3); }) == ErrorCode::IoError);
  {
    std::ofstream(dir / "bad.jsonl") << "{\"schema_version\":1,\"kind\":\"label\"}\n";
  }
  CHECK(code_of([&] { read_index(dir / "bad.jsonl"); }) == ErrorCode::FormatError);
}
