#include "depthsynth/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace depthsynth {

namespace {

using nlohmann::json;

std::string describe(const std::string& message, std::optional<std::size_t> entry,
                     const std::string& field) {
  std::ostringstream out;
  if (entry) out << "entry " << *entry << ": ";
  if (!field.empty()) out << "field '" << field << "': ";
  out << message;
  return out.str();
}

class EntryParser {
 public:
  EntryParser(const json& obj, std::size_t index) : obj_(obj), index_(index) {}

  [[noreturn]] void fail(const std::string& field, const std::string& message) const {
    throw ManifestError(message, index_, field);
  }

  void reject_unknown(std::initializer_list<const char*> known, const std::string& where) const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      bool ok = false;
      for (const char* k : known) ok = ok || it.key() == k;
      if (!ok) fail(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
    }
  }

  const json* find(const char* field) const {
    const auto it = obj_.find(field);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string string(const char* field, const std::string& prefix = {}) const {
    const json* v = find(field);
    if (v == nullptr) fail(prefix + field, "missing required field");
    if (!v->is_string() || v->get_ref<const std::string&>().empty()) {
      fail(prefix + field, "must be a non-empty string");
    }
    return v->get<std::string>();
  }

  std::optional<std::string> optional_string(const char* field,
                                             const std::string& prefix = {}) const {
    if (find(field) == nullptr) return std::nullopt;
    return string(field, prefix);
  }

  double number(const char* field, const std::string& prefix = {}) const {
    const json* v = find(field);
    if (v == nullptr) fail(prefix + field, "missing required field");
    if (!v->is_number()) fail(prefix + field, "must be a number");
    return v->get<double>();
  }

  template <typename Fn>
  auto parsed(const char* field, const std::string& prefix, Fn&& fn) const {
    const std::string text = string(field, prefix);
    try {
      return fn(text);
    } catch (const Error& e) {
      fail(prefix + field, e.what());
    }
  }

 private:
  const json& obj_;
  std::size_t index_;
};

PredictionRef parse_prediction(const json& p, std::size_t entry, std::size_t k) {
  const std::string prefix = "predictions[" + std::to_string(k) + "].";
  if (!p.is_object()) throw ManifestError("must be an object", entry, prefix.substr(0, prefix.size() - 1));
  EntryParser parser(p, entry);
  parser.reject_unknown({"model_id", "path", "scale_kind", "unit", "alignment"},
                        prefix.substr(0, prefix.size() - 1));
  PredictionRef ref;
  ref.model_id = parser.string("model_id", prefix);
  ref.path = parser.string("path", prefix);
  ref.scale_kind = parser.parsed("scale_kind", prefix, parse_scale_kind);
  if (parser.find("unit") != nullptr) ref.unit = parser.parsed("unit", prefix, parse_depth_unit);
  if (parser.find("alignment") != nullptr) {
    ref.alignment = parser.parsed("alignment", prefix, parse_alignment_mode);
  }
  return ref;
}

ManifestEntry parse_entry(const json& e, std::size_t index) {
  if (!e.is_object()) throw ManifestError("entry must be an object", index);
  EntryParser parser(e, index);
  parser.reject_unknown({"id", "image", "depth", "depth_unit", "intrinsics", "predictions"}, "");

  ManifestEntry entry;
  entry.image_path = parser.string("image");
  entry.id = parser.optional_string("id").value_or(entry.image_path);
  entry.depth_path = parser.optional_string("depth");
  if (parser.find("depth_unit") != nullptr) {
    entry.depth_unit = parser.parsed("depth_unit", "", parse_depth_unit);
  }

  const json* k = parser.find("intrinsics");
  if (k == nullptr) parser.fail("intrinsics", "missing required field");
  if (!k->is_object()) parser.fail("intrinsics", "must be an object");
  EntryParser kp(*k, index);
  kp.reject_unknown({"fx", "fy", "cx", "cy"}, "intrinsics");
  entry.intrinsics = {kp.number("fx", "intrinsics."), kp.number("fy", "intrinsics."),
                      kp.number("cx", "intrinsics."), kp.number("cy", "intrinsics.")};
  try {
    entry.intrinsics.validate();
  } catch (const Error& err) {
    parser.fail("intrinsics", err.what());
  }

  if (const json* preds = parser.find("predictions")) {
    if (!preds->is_array()) parser.fail("predictions", "must be an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < preds->size(); ++i) {
      PredictionRef ref = parse_prediction((*preds)[i], index, i);
      if (!seen.insert(ref.model_id).second) {
        parser.fail("predictions[" + std::to_string(i) + "].model_id",
                    "duplicate model_id '" + ref.model_id + "'");
      }
      entry.predictions.push_back(std::move(ref));
    }
  }
  if (!entry.labeled() && entry.predictions.empty()) {
    parser.fail("predictions", "unlabeled entries (no 'depth') need at least one prediction");
  }
  return entry;
}

void check_exists(const Manifest& m, const std::string& path, std::size_t index,
                  const std::string& field) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(m.resolve(path), ec)) {
    throw ManifestError("file not found: " + m.resolve(path).string(), index, field);
  }
}

}  // namespace

ManifestError::ManifestError(const std::string& message, std::optional<std::size_t> entry_index,
                             std::string field)
    : Error(ErrorCode::ManifestError, describe(message, entry_index, field)),
      entry_index_(entry_index),
      field_(std::move(field)) {}

std::filesystem::path Manifest::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest parse_manifest(const json& doc, const std::filesystem::path& base_dir, bool check_files) {
  if (!doc.is_object()) throw ManifestError("manifest must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "schema_version" && it.key() != "entries") {
      throw ManifestError("unknown field", std::nullopt, it.key());
    }
  }
  const auto version = doc.find("schema_version");
  if (version == doc.end()) throw ManifestError("missing required field", std::nullopt, "schema_version");
  if (!version->is_number_integer() || version->get<long long>() != kManifestSchemaVersion) {
    throw ManifestError("unsupported schema version (expected " +
                            std::to_string(kManifestSchemaVersion) + ")",
                        std::nullopt, "schema_version");
  }
  const auto entries = doc.find("entries");
  if (entries == doc.end() || !entries->is_array()) {
    throw ManifestError("must be an array", std::nullopt, "entries");
  }

  Manifest m;
  m.base_dir = base_dir;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < entries->size(); ++i) {
    ManifestEntry entry = parse_entry((*entries)[i], i);
    if (!ids.insert(entry.id).second) {
      throw ManifestError("duplicate id '" + entry.id + "'", i, "id");
    }
    m.entries.push_back(std::move(entry));
  }

  if (check_files) {
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      const auto& e = m.entries[i];
      check_exists(m, e.image_path, i, "image");
      if (e.depth_path) check_exists(m, *e.depth_path, i, "depth");
      for (std::size_t k = 0; k < e.predictions.size(); ++k) {
        check_exists(m, e.predictions[k].path, i, "predictions[" + std::to_string(k) + "].path");
      }
    }
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path, bool check_files) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ManifestError(std::string("invalid JSON: ") + e.what());
  }
  return parse_manifest(doc, path.parent_path(), check_files);
}

json to_json(const Manifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json j;
    j["id"] = e.id;
    j["image"] = e.image_path;
    if (e.depth_path) j["depth"] = *e.depth_path;
    j["depth_unit"] = std::string(to_string(e.depth_unit));
    j["intrinsics"] = {{"fx", e.intrinsics.fx},
                       {"fy", e.intrinsics.fy},
                       {"cx", e.intrinsics.cx},
                       {"cy", e.intrinsics.cy}};
    json preds = json::array();
    for (const auto& p : e.predictions) {
      json pj = {{"model_id", p.model_id},
                 {"path", p.path},
                 {"scale_kind", std::string(to_string(p.scale_kind))},
                 {"unit", std::string(to_string(p.unit))}};
      if (p.alignment) pj["alignment"] = std::string(to_string(*p.alignment));
      preds.push_back(std::move(pj));
    }
    j["predictions"] = std::move(preds);
    entries.push_back(std::move(j));
  }
  return {{"schema_version", manifest.schema_version}, {"entries", std::move(entries)}};
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  out << to_json(manifest).dump(2) << '\n';
}

EntryData load_entry(const Manifest& manifest, const ManifestEntry& entry, bool with_image) {
  EntryData data;
  if (entry.depth_path) data.gt = read_depth(manifest.resolve(*entry.depth_path), entry.depth_unit);
  for (const auto& p : entry.predictions) {
    data.predictions.push_back(
        {p.model_id, read_depth(manifest.resolve(p.path), p.unit), p.scale_kind, p.alignment});
  }
  if (with_image) data.image = read_gray_image(manifest.resolve(entry.image_path));
  return data;
}

}  // namespace depthsynth
