#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "depthsynth/alignment.hpp"
#include "depthsynth/camera.hpp"
#include "depthsynth/depth_io.hpp"
#include "depthsynth/error.hpp"
#include "depthsynth/synthesis.hpp"
#include "json.hpp"

namespace depthsynth {

inline constexpr int kManifestSchemaVersion = 1;

struct PredictionRef {
  std::string model_id;
  std::string path;
  ScaleKind scale_kind = ScaleKind::Metric;
  DepthUnit unit = DepthUnit::Meters;
  std::optional<AlignmentMode> alignment;

  friend bool operator==(const PredictionRef&, const PredictionRef&) = default;
};

struct ManifestEntry {
  /// Stable identity used for seeding; defaults to the image path.
  std::string id;
  std::string image_path;
  std::optional<std::string> depth_path;
  DepthUnit depth_unit = DepthUnit::Millimeters;
  CameraIntrinsics intrinsics;
  std::vector<PredictionRef> predictions;

  bool labeled() const noexcept { return depth_path.has_value(); }

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  int schema_version = kManifestSchemaVersion;
  /// Directory relative paths resolve against (the manifest's directory).
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const std::string& path) const;

  friend bool operator==(const Manifest& a, const Manifest& b) {
    return a.schema_version == b.schema_version && a.entries == b.entries;
  }
};

/// Raised for schema violations; entry_index is set when the problem is local
/// to one entry.
class ManifestError : public Error {
 public:
  ManifestError(const std::string& message, std::optional<std::size_t> entry_index = {},
                std::string field = {});

  std::optional<std::size_t> entry_index() const noexcept { return entry_index_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::optional<std::size_t> entry_index_;
  std::string field_;
};

/// Validates the schema; with check_files, every referenced file must exist.
Manifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                        bool check_files);
Manifest read_manifest(const std::filesystem::path& path, bool check_files = true);

nlohmann::json to_json(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Loaded inputs of one entry.
struct EntryData {
  std::optional<DepthMap> gt;
  std::vector<ModelPrediction> predictions;
  std::optional<GrayImage> image;
};

/// Reads the files an entry references. The image is decoded only on request.
EntryData load_entry(const Manifest& manifest, const ManifestEntry& entry, bool with_image);

}  // namespace depthsynth
