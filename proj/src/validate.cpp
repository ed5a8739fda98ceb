#include "depthsynth/validate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "depthsynth/depth_io.hpp"
#include "depthsynth/error.hpp"
#include "depthsynth/manifest.hpp"
#include "depthsynth/pipeline.hpp"
#include "depthsynth/triplet_index.hpp"

namespace depthsynth {

namespace fs = std::filesystem;

namespace {

struct EntryRecords {
  std::vector<const LabelRecord*> labels;
  std::vector<const SparseRecord*> sparse;
  const EntryOutcome* outcome = nullptr;
};

std::optional<std::size_t> expected_count(const SparseRecord& rec, std::size_t eta) {
  if (std::holds_alternative<UniformParams>(rec.sampler.params)) {
    if (!rec.rho) return std::nullopt;
    const auto rounded = static_cast<std::size_t>(std::llround(*rec.rho * static_cast<double>(eta)));
    return std::min(eta, std::max(kMinSparsePoints, rounded));
  }
  if (const auto* f = std::get_if<FeatureParams>(&rec.sampler.params)) {
    return std::min(f->points, eta);
  }
  return std::nullopt;
}

class Validator {
 public:
  Validator(const fs::path& index_path, const ValidateOptions& options)
      : index_(read_index(index_path)), options_(options) {}

  ValidationReport run() {
    group();
    check_counts();
    std::size_t label_no = 0;
    for (const auto& r : index_.records) {
      if (const auto* l = std::get_if<LabelRecord>(&r)) {
        check_label(*l, options_.replay_every > 0 && label_no % options_.replay_every == 0);
        ++label_no;
      }
    }
    return std::move(report_);
  }

 private:
  const PipelineConfig& cfg() const { return index_.header.config; }

  void flag(std::string id, std::string check, std::string message) {
    report_.violations.push_back({std::move(id), std::move(check), std::move(message)});
  }

  void group() {
    for (const auto& r : index_.records) {
      if (const auto* l = std::get_if<LabelRecord>(&r)) {
        entries_[l->entry_index].labels.push_back(l);
      } else if (const auto* s = std::get_if<SparseRecord>(&r)) {
        entries_[s->entry_index].sparse.push_back(s);
        sparse_by_label_[s->label_id].push_back(s);
      } else {
        const auto& o = std::get<EntryOutcome>(r);
        entries_[o.entry_index].outcome = &o;
      }
    }
  }

  void check_counts() {
    const std::size_t n = cfg().labels_per_image;
    const std::size_t m = cfg().sparse_per_label;
    for (const auto& [index, e] : entries_) {
      if (index >= index_.header.entry_count) {
        flag("entry " + std::to_string(index), "count", "entry index beyond manifest size");
      }
    }
    for (std::size_t i = 0; i < index_.header.entry_count; ++i) {
      const auto it = entries_.find(i);
      const std::string id = "entry " + std::to_string(i);
      if (it == entries_.end()) {
        flag(id, "count", "no records for entry");
        continue;
      }
      const EntryRecords& e = it->second;
      if (e.outcome != nullptr) {
        if (!e.labels.empty() || !e.sparse.empty()) {
          flag(id, "count", "entry marked " + std::string(e.outcome->status ==
                                                                  EntryOutcome::Status::Failed
                                                              ? "failed"
                                                              : "skipped") +
                                " but has label or sparse records");
        }
        continue;
      }
      if (e.labels.size() != n || e.sparse.size() != n * m) {
        flag(id, "count",
             "expected " + std::to_string(n) + " labels and " + std::to_string(n * m) +
                 " sparse maps, found " + std::to_string(e.labels.size()) + " and " +
                 std::to_string(e.sparse.size()));
      }
    }
  }

  std::optional<DepthMap> load(const std::string& id, const std::string& rel) {
    const fs::path path = index_.dir / rel;
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
      flag(id, "missing-file", path.string());
      return std::nullopt;
    }
    try {
      return read_depth(path, default_unit(cfg().output_format));
    } catch (const Error& e) {
      flag(id, "unreadable", e.what());
      return std::nullopt;
    }
  }

  /// Returns false after flagging the first broken contract of a label.
  bool label_contracts(const LabelRecord& l, const DepthMap& label) {
    const std::size_t valid = label.valid_count();
    if (valid == 0) {
      flag(l.id, "mask", "label has no valid pixels");
      return false;
    }
    if (valid != l.valid_count) {
      flag(l.id, "mask",
           "valid pixel count " + std::to_string(valid) + " != recorded " +
               std::to_string(l.valid_count));
      return false;
    }
    if (l.sparse_paths.size() != cfg().sparse_per_label) {
      flag(l.id, "count", "label lists " + std::to_string(l.sparse_paths.size()) + " sparse maps");
      return false;
    }
    return true;
  }

  bool sparse_contracts(const SparseRecord& s, const DepthMap& sparse, const DepthMap* label) {
    if (label == nullptr) return true;
    if (sparse.width() != label->width() || sparse.height() != label->height()) {
      flag(s.id, "shape", "sparse map shape differs from its label");
      return false;
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < sparse.size(); ++i) {
      if (!sparse.is_valid(i)) continue;
      ++count;
      if (!label->is_valid(i)) {
        flag(s.id, "mask", "sparse pixel " + std::to_string(i) + " is invalid in the label");
        return false;
      }
      if (sparse.value(i) != label->value(i)) {
        flag(s.id, "position",
             "sparse pixel " + std::to_string(i) + " differs from the label value");
        return false;
      }
    }
    if (count != s.count) {
      flag(s.id, "count",
           "file has " + std::to_string(count) + " points, record says " + std::to_string(s.count));
      return false;
    }
    if (count < kMinSparsePoints) {
      flag(s.id, "count", "fewer than " + std::to_string(kMinSparsePoints) + " points");
      return false;
    }
    if (const auto expected = expected_count(s, label->valid_count()); expected && *expected != count) {
      flag(s.id, "count",
           "sampler contract expects " + std::to_string(*expected) + " points, found " +
               std::to_string(count));
      return false;
    }
    return true;
  }

  const Manifest* manifest() {
    if (!manifest_loaded_) {
      manifest_loaded_ = true;
      try {
        manifest_ = read_manifest(index_.header.manifest, false);
      } catch (const Error& e) {
        flag("index", "replay", std::string("manifest unavailable: ") + e.what());
      }
    }
    return manifest_ ? &*manifest_ : nullptr;
  }

  void check_label(const LabelRecord& l, bool replay) {
    ++report_.labels_checked;
    std::optional<DepthMap> label = load(l.id, l.path);
    const bool label_ok = label && label_contracts(l, *label);

    std::vector<std::pair<const SparseRecord*, std::optional<DepthMap>>> sparse;
    for (const SparseRecord* s : sparse_by_label_[l.id]) {
      ++report_.sparse_checked;
      std::optional<DepthMap> map = load(s->id, s->path);
      bool ok = map.has_value();
      if (ok) ok = sparse_contracts(*s, *map, label ? &*label : nullptr);
      sparse.emplace_back(s, ok ? std::move(map) : std::nullopt);
    }
    if (!replay || manifest() == nullptr) return;
    replay_label(l, label_ok ? &*label : nullptr, sparse);
  }

  void replay_label(const LabelRecord& l, const DepthMap* stored,
                    const std::vector<std::pair<const SparseRecord*, std::optional<DepthMap>>>& sparse) {
    const Manifest& m = *manifest();
    if (l.entry_index >= m.entries.size()) {
      flag(l.id, "replay", "entry index not in manifest");
      return;
    }
    const ManifestEntry& entry = m.entries[l.entry_index];
    ++report_.labels_replayed;
    try {
      if (entry.id != l.provenance.image_id) {
        flag(l.id, "replay", "image id '" + l.provenance.image_id + "' != manifest id '" + entry.id + "'");
        return;
      }
      if (l.provenance.seed != label_seed(cfg().global_seed, entry.id, l.label_index)) {
        flag(l.id, "replay", "seed does not derive from the global seed");
        return;
      }
      const EntryData data = load_entry(m, entry, config_needs_image(cfg()));
      const SynthesisResult r = synthesize_entry_label(entry, data, cfg(), l.provenance.seed);
      if (!(r.provenance == l.provenance)) {
        flag(l.id, "replay", "provenance differs from replay");
        return;
      }
      if (stored != nullptr && !(stored->grid() == r.label.grid())) {
        flag(l.id, "replay", "label file differs from replay");
        return;
      }
      for (const auto& [s, map] : sparse) {
        if (!map) continue;
        if (s->seed != sparse_seed(l.provenance.seed, s->sparse_index)) {
          flag(s->id, "replay", "seed does not derive from the label seed");
          continue;
        }
        const SampleResult replayed =
            sample_entry_sparse(r.label, entry, data, cfg(), s->seed, s->sparse_index);
        if (replayed.rho != s->rho || !(replayed.sparse.to_depth_map().grid() == map->grid())) {
          flag(s->id, "replay", "sparse map differs from replay");
        }
      }
    } catch (const Error& e) {
      flag(l.id, "replay", e.what());
    }
  }

  TripletIndex index_;
  ValidateOptions options_;
  ValidationReport report_;
  std::map<std::size_t, EntryRecords> entries_;
  std::map<std::string, std::vector<const SparseRecord*>> sparse_by_label_;
  bool manifest_loaded_ = false;
  std::optional<Manifest> manifest_;
};

}  // namespace

ValidationReport run_validate(const fs::path& index_path, const ValidateOptions& options) {
  return Validator(index_path, options).run();
}

nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json violations = nlohmann::json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"record_id", v.record_id}, {"check", v.check}, {"message", v.message}});
  }
  return {{"ok", report.ok()},
          {"labels_checked", report.labels_checked},
          {"sparse_checked", report.sparse_checked},
          {"labels_replayed", report.labels_replayed},
          {"violations", std::move(violations)}};
}

}  // namespace depthsynth
