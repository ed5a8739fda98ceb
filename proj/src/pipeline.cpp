#include "depthsynth/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "depthsynth/depth_io.hpp"
#include "depthsynth/error.hpp"
#include "depthsynth/triplet_index.hpp"
#include "depthsynth/version.hpp"

namespace depthsynth {

namespace fs = std::filesystem;

std::uint64_t label_seed(std::uint64_t global_seed, std::string_view image_id,
                         std::size_t label_index) noexcept {
  return derive_seed(global_seed, image_id, label_index);
}

std::uint64_t sparse_seed(std::uint64_t label_seed, std::size_t sparse_index) noexcept {
  return derive_seed(label_seed, "sparse", sparse_index);
}

SynthesisResult synthesize_entry_label(const ManifestEntry& entry, const EntryData& data,
                                       const PipelineConfig& cfg, std::uint64_t seed) {
  SynthesisResult r = synthesize_label(entry.id, data.gt ? &*data.gt : nullptr, data.predictions,
                                       cfg.synthesis, seed);
  r.label = quantize_for(r.label, cfg.output_format);
  if (r.label.valid_count() == 0) {
    throw Error(ErrorCode::EmptyResult, "label of '" + entry.id + "' empty after quantization");
  }
  return r;
}

SampleResult sample_entry_sparse(const DepthMap& label, const ManifestEntry& entry,
                                 const EntryData& data, const PipelineConfig& cfg,
                                 std::uint64_t seed, std::size_t sparse_index) {
  const SamplerSpec& spec = cfg.samplers.at(sparse_index % cfg.samplers.size());
  SeededRng rng(seed);
  return sample(label, spec, &entry.intrinsics, data.image ? &*data.image : nullptr, rng);
}

bool config_needs_image(const PipelineConfig& cfg) {
  for (const auto& s : cfg.samplers) {
    if (s.kind() == SamplerKind::Features) return true;
  }
  return false;
}

std::string label_file_name(std::size_t entry_index, std::size_t label_index, DepthFormat format) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "labels/%06zu_%zu", entry_index, label_index);
  return buf + std::string(extension(format));
}

std::string sparse_file_name(std::size_t entry_index, std::size_t label_index,
                             std::size_t sparse_index, DepthFormat format) {
  char buf[80];
  std::snprintf(buf, sizeof(buf), "sparse/%06zu_%zu_%zu", entry_index, label_index, sparse_index);
  return buf + std::string(extension(format));
}

namespace {

struct EntryOutput {
  std::vector<IndexRecord> records;
  std::size_t labels = 0;
  std::size_t sparse = 0;
  std::size_t warnings = 0;
  bool failed = false;
  bool skipped = false;
};

struct PendingFile {
  std::string path;
  DepthMap depth;
};

EntryOutput process_entry(const Manifest& manifest, std::size_t index, const PipelineConfig& cfg,
                          const fs::path& out_dir) {
  const ManifestEntry& entry = manifest.entries[index];
  EntryOutput out;
  if (!entry.labeled() && !cfg.use_unlabeled) {
    out.skipped = true;
    out.records.push_back(EntryOutcome{index, entry.id, EntryOutcome::Status::Skipped, "",
                                       "unlabeled entries disabled by use_unlabeled"});
    return out;
  }
  try {
    const EntryData data = load_entry(manifest, entry, config_needs_image(cfg));
    std::vector<PendingFile> files;
    std::vector<IndexRecord> records;
    for (std::size_t j = 0; j < cfg.labels_per_image; ++j) {
      const std::uint64_t seed = label_seed(cfg.global_seed, entry.id, j);
      SynthesisResult r = synthesize_entry_label(entry, data, cfg, seed);

      LabelRecord label;
      label.id = label_record_id(index, j);
      label.entry_index = index;
      label.label_index = j;
      label.image_path = entry.image_path;
      label.path = label_file_name(index, j, cfg.output_format);
      label.valid_count = r.label.valid_count();
      out.warnings += r.provenance.warnings.size();

      std::vector<SparseRecord> sparse;
      for (std::size_t k = 0; k < cfg.sparse_per_label; ++k) {
        const std::uint64_t s_seed = sparse_seed(seed, k);
        SampleResult s = sample_entry_sparse(r.label, entry, data, cfg, s_seed, k);
        SparseRecord rec;
        rec.id = sparse_record_id(index, j, k);
        rec.label_id = label.id;
        rec.entry_index = index;
        rec.label_index = j;
        rec.sparse_index = k;
        rec.path = sparse_file_name(index, j, k, cfg.output_format);
        rec.sampler = cfg.samplers[k % cfg.samplers.size()];
        rec.rho = s.rho;
        rec.seed = s_seed;
        rec.count = s.sparse.points.size();
        label.sparse_paths.push_back(rec.path);
        files.push_back({rec.path, s.sparse.to_depth_map()});
        sparse.push_back(std::move(rec));
      }
      label.provenance = std::move(r.provenance);
      files.push_back({label.path, std::move(r.label)});
      records.push_back(std::move(label));
      for (auto& s : sparse) records.push_back(std::move(s));
    }
    // Nothing touches the disk until the whole entry succeeded in memory.
    for (const auto& f : files) write_depth(f.depth, out_dir / f.path, cfg.output_format);
    out.labels = cfg.labels_per_image;
    out.sparse = cfg.labels_per_image * cfg.sparse_per_label;
    out.records = std::move(records);
  } catch (const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    out = EntryOutput{};
    out.failed = true;
    out.records.push_back(EntryOutcome{index, entry.id, EntryOutcome::Status::Failed,
                                       err ? std::string(to_string(err->code())) : "Internal",
                                       e.what()});
  }
  return out;
}

}  // namespace

RunSummary run_synthesize(const Manifest& manifest, const fs::path& manifest_path,
                          const PipelineConfig& cfg, const fs::path& out_dir,
                          const ProgressFn& progress) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(out_dir / "labels", ec);
  if (!ec) fs::create_directories(out_dir / "sparse", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  IndexHeader header;
  header.tool_version = kVersion;
  header.manifest = fs::absolute(manifest_path).lexically_normal().string();
  header.entry_count = manifest.entries.size();
  header.config = cfg;
  IndexWriter writer(out_dir / kIndexFileName, header);

  RunSummary summary;
  summary.entries = manifest.entries.size();
  std::mutex summary_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= manifest.entries.size()) return;
      EntryOutput out = process_entry(manifest, i, cfg, out_dir);
      try {
        writer.commit(i, out.records);
      } catch (...) {
        std::lock_guard lock(summary_mutex);
        if (!fatal) fatal = std::current_exception();
        next.store(manifest.entries.size());
        return;
      }
      std::lock_guard lock(summary_mutex);
      summary.processed += (out.failed || out.skipped) ? 0 : 1;
      summary.failed += out.failed ? 1 : 0;
      summary.skipped += out.skipped ? 1 : 0;
      summary.labels += out.labels;
      summary.sparse_maps += out.sparse;
      summary.warnings += out.warnings;
      if (progress) {
        progress(summary.processed + summary.failed + summary.skipped, summary.entries);
      }
    }
  };

  const std::size_t workers = std::min(cfg.workers, std::max<std::size_t>(1, summary.entries));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  writer.finish(manifest.entries.size());

  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  summary.images_per_second = summary.seconds > 0 ? summary.processed / summary.seconds : 0.0;
  return summary;
}

}  // namespace depthsynth
