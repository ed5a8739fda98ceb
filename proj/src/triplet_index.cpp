#include "depthsynth/triplet_index.hpp"

#include <cstdio>
#include <string>

#include "depthsynth/error.hpp"

namespace depthsynth {

namespace {

using nlohmann::json;

std::string_view to_string(EntryOutcome::Status s) {
  return s == EntryOutcome::Status::Failed ? "failed" : "skipped";
}

json base(const char* kind) { return {{"schema_version", kIndexSchemaVersion}, {"kind", kind}}; }

std::optional<double> optional_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string label_record_id(std::size_t entry_index, std::size_t label_index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "e%06zu.l%zu", entry_index, label_index);
  return buf;
}

std::string sparse_record_id(std::size_t entry_index, std::size_t label_index,
                             std::size_t sparse_index) {
  return label_record_id(entry_index, label_index) + ".s" + std::to_string(sparse_index);
}

json to_json(const SynthesisProvenance& prov) {
  json models = json::array();
  for (std::size_t t = 0; t < prov.model_ids.size(); ++t) {
    const ModelAlignment& a = prov.alignment.at(t);
    models.push_back({{"model_id", prov.model_ids[t]},
                      {"lambda", prov.weights.lambdas.at(t)},
                      {"alignment",
                       {{"requested", std::string(to_string(a.requested))},
                        {"applied", std::string(to_string(a.applied))},
                        {"scale", a.scale},
                        {"shift", a.shift},
                        {"fell_back", a.fell_back},
                        {"reference", a.reference}}}});
  }
  return {{"image_id", prov.image_id},
          {"seed", prov.seed},
          {"labeled", prov.labeled},
          {"models", std::move(models)},
          {"gt_weight", prov.labeled ? prov.weights.gt_weight() : 0.0},
          {"theta", prov.theta.theta},
          {"interpolated", prov.interpolated},
          {"warnings", prov.warnings}};
}

SynthesisProvenance provenance_from_json(const json& j) {
  SynthesisProvenance prov;
  prov.image_id = j.at("image_id").get<std::string>();
  prov.seed = j.at("seed").get<std::uint64_t>();
  prov.labeled = j.at("labeled").get<bool>();
  for (const auto& m : j.at("models")) {
    prov.model_ids.push_back(m.at("model_id").get<std::string>());
    prov.weights.lambdas.push_back(m.at("lambda").get<double>());
    const json& a = m.at("alignment");
    ModelAlignment rec;
    rec.model_id = prov.model_ids.back();
    rec.requested = parse_alignment_mode(a.at("requested").get<std::string>());
    rec.applied = parse_alignment_mode(a.at("applied").get<std::string>());
    rec.scale = a.at("scale").get<double>();
    rec.shift = a.at("shift").get<double>();
    rec.fell_back = a.at("fell_back").get<bool>();
    rec.reference = a.at("reference").get<std::string>();
    prov.alignment.push_back(std::move(rec));
  }
  prov.theta.theta = j.at("theta").get<double>();
  prov.interpolated = j.at("interpolated").get<bool>();
  prov.warnings = j.at("warnings").get<std::vector<std::string>>();
  return prov;
}

json to_json(const IndexHeader& header) {
  json j = base("header");
  j["tool_version"] = header.tool_version;
  j["manifest"] = header.manifest;
  j["entry_count"] = header.entry_count;
  j["config"] = to_json(header.config, /*with_workers=*/false);
  return j;
}

json to_json(const IndexRecord& record) {
  if (const auto* l = std::get_if<LabelRecord>(&record)) {
    json j = base("label");
    j["id"] = l->id;
    j["entry_index"] = l->entry_index;
    j["label_index"] = l->label_index;
    j["image"] = l->image_path;
    j["path"] = l->path;
    j["sparse_paths"] = l->sparse_paths;
    j["valid_count"] = l->valid_count;
    j["provenance"] = to_json(l->provenance);
    return j;
  }
  if (const auto* s = std::get_if<SparseRecord>(&record)) {
    json j = base("sparse");
    j["id"] = s->id;
    j["label_id"] = s->label_id;
    j["entry_index"] = s->entry_index;
    j["label_index"] = s->label_index;
    j["sparse_index"] = s->sparse_index;
    j["path"] = s->path;
    j["sampler"] = to_json(s->sampler);
    j["rho"] = s->rho ? json(*s->rho) : json(nullptr);
    j["seed"] = s->seed;
    j["count"] = s->count;
    return j;
  }
  const auto& o = std::get<EntryOutcome>(record);
  json j = base(o.status == EntryOutcome::Status::Failed ? "failure" : "skipped");
  j["entry_index"] = o.entry_index;
  j["image_id"] = o.image_id;
  j["status"] = std::string(to_string(o.status));
  j["error_code"] = o.error_code;
  j["message"] = o.message;
  return j;
}

IndexRecord index_record_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "label") {
    LabelRecord l;
    l.id = j.at("id").get<std::string>();
    l.entry_index = j.at("entry_index").get<std::size_t>();
    l.label_index = j.at("label_index").get<std::size_t>();
    l.image_path = j.at("image").get<std::string>();
    l.path = j.at("path").get<std::string>();
    l.sparse_paths = j.at("sparse_paths").get<std::vector<std::string>>();
    l.valid_count = j.at("valid_count").get<std::size_t>();
    l.provenance = provenance_from_json(j.at("provenance"));
    return l;
  }
  if (kind == "sparse") {
    SparseRecord s;
    s.id = j.at("id").get<std::string>();
    s.label_id = j.at("label_id").get<std::string>();
    s.entry_index = j.at("entry_index").get<std::size_t>();
    s.label_index = j.at("label_index").get<std::size_t>();
    s.sparse_index = j.at("sparse_index").get<std::size_t>();
    s.path = j.at("path").get<std::string>();
    s.sampler = sampler_spec_from_json(j.at("sampler"));
    s.rho = optional_double(j, "rho");
    s.seed = j.at("seed").get<std::uint64_t>();
    s.count = j.at("count").get<std::size_t>();
    return s;
  }
  if (kind == "failure" || kind == "skipped") {
    EntryOutcome o;
    o.entry_index = j.at("entry_index").get<std::size_t>();
    o.image_id = j.at("image_id").get<std::string>();
    o.status = kind == "failure" ? EntryOutcome::Status::Failed : EntryOutcome::Status::Skipped;
    o.error_code = j.at("error_code").get<std::string>();
    o.message = j.at("message").get<std::string>();
    return o;
  }
  throw Error(ErrorCode::FormatError, "unknown index record kind '" + kind + "'");
}

TripletIndex read_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open index " + path.string());
  TripletIndex index;
  index.dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.at("schema_version").get<int>() != kIndexSchemaVersion) {
        throw Error(ErrorCode::FormatError, "unsupported schema_version");
      }
      if (!have_header) {
        if (j.at("kind").get<std::string>() != "header") {
          throw Error(ErrorCode::FormatError, "first line must be the header");
        }
        index.header.tool_version = j.at("tool_version").get<std::string>();
        index.header.manifest = j.at("manifest").get<std::string>();
        index.header.entry_count = j.at("entry_count").get<std::size_t>();
        index.header.config = pipeline_config_from_json(j.at("config"));
        have_header = true;
        continue;
      }
      index.records.push_back(index_record_from_json(j));
    } catch (const Error& e) {
      throw Error(ErrorCode::FormatError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::FormatError, path.string() + ": missing header line");
  return index;
}

IndexWriter::IndexWriter(const std::filesystem::path& path, const IndexHeader& header)
    : out_(path, std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::IoError, "cannot create index " + path.string());
  out_ << to_json(header).dump() << '\n';
  out_.flush();
}

void IndexWriter::commit(std::size_t entry_index, const std::vector<IndexRecord>& records) {
  std::string block;
  for (const auto& r : records) {
    block += to_json(r).dump();
    block += '\n';
  }
  std::lock_guard lock(mutex_);
  pending_.emplace(entry_index, std::move(block));
  flush_ready();
}

void IndexWriter::flush_ready() {
  bool wrote = false;
  for (auto it = pending_.find(next_); it != pending_.end(); it = pending_.find(next_)) {
    out_ << it->second;
    pending_.erase(it);
    ++next_;
    wrote = true;
  }
  if (wrote) out_.flush();
  if (!out_) throw Error(ErrorCode::IoError, "failed writing triplet index");
}

void IndexWriter::finish(std::size_t entry_count) {
  std::lock_guard lock(mutex_);
  flush_ready();
  if (next_ != entry_count || !pending_.empty()) {
    throw Error(ErrorCode::IoError, "triplet index incomplete: " + std::to_string(next_) + " of " +
                                        std::to_string(entry_count) + " entries written");
  }
}

}  // namespace depthsynth
