#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "depthsynth/config.hpp"
#include "depthsynth/samplers.hpp"
#include "depthsynth/synthesis.hpp"
#include "json.hpp"

namespace depthsynth {

// The triplet index is JSON Lines: a header line followed by one record per
// line. Every line carries "schema_version" and "kind".
inline constexpr int kIndexSchemaVersion = 1;
inline constexpr const char* kIndexFileName = "index.jsonl";

struct IndexHeader {
  std::string tool_version;
  /// Absolute path of the manifest the run consumed.
  std::string manifest;
  std::size_t entry_count = 0;
  PipelineConfig config;
};

/// One pseudo dense label.
struct LabelRecord {
  std::string id;
  std::size_t entry_index = 0;
  std::size_t label_index = 0;
  std::string image_path;
  /// Relative to the index directory.
  std::string path;
  std::vector<std::string> sparse_paths;
  std::size_t valid_count = 0;
  SynthesisProvenance provenance;
};

/// One sparse map sampled from a label.
struct SparseRecord {
  std::string id;
  std::string label_id;
  std::size_t entry_index = 0;
  std::size_t label_index = 0;
  std::size_t sparse_index = 0;
  std::string path;
  SamplerSpec sampler;
  std::optional<double> rho;
  std::uint64_t seed = 0;
  std::size_t count = 0;
};

/// Entry that produced no records.
struct EntryOutcome {
  enum class Status { Failed, Skipped };
  std::size_t entry_index = 0;
  std::string image_id;
  Status status = Status::Failed;
  std::string error_code;
  std::string message;
};

using IndexRecord = std::variant<LabelRecord, SparseRecord, EntryOutcome>;

struct TripletIndex {
  std::filesystem::path dir;
  IndexHeader header;
  std::vector<IndexRecord> records;
};

std::string label_record_id(std::size_t entry_index, std::size_t label_index);
std::string sparse_record_id(std::size_t entry_index, std::size_t label_index,
                             std::size_t sparse_index);

nlohmann::json to_json(const SynthesisProvenance& prov);
SynthesisProvenance provenance_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IndexHeader& header);
nlohmann::json to_json(const IndexRecord& record);
IndexRecord index_record_from_json(const nlohmann::json& j);

/// Throws IoError when unreadable and FormatError on malformed lines.
TripletIndex read_index(const std::filesystem::path& path);

/// Serializes index appends. Records are committed per manifest entry and
/// written strictly in entry order, so the file does not depend on which
/// worker finished first.
class IndexWriter {
 public:
  IndexWriter(const std::filesystem::path& path, const IndexHeader& header);

  void commit(std::size_t entry_index, const std::vector<IndexRecord>& records);
  /// Throws if some entry below `entry_count` was never committed.
  void finish(std::size_t entry_count);

 private:
  void flush_ready();

  std::mutex mutex_;
  std::ofstream out_;
  std::size_t next_ = 0;
  std::map<std::size_t, std::string> pending_;
};

}  // namespace depthsynth
