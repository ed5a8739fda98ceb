#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace depthsynth {

struct Violation {
  /// Record id, or "entry <n>" for count problems, or "index" for the header.
  std::string record_id;
  /// missing-file, unreadable, shape, mask, position, count, replay
  std::string check;
  std::string message;
};

struct ValidationReport {
  std::size_t labels_checked = 0;
  std::size_t sparse_checked = 0;
  std::size_t labels_replayed = 0;
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

struct ValidateOptions {
  /// Replays every k-th label (and its sparse maps) from the manifest; 0
  /// disables replay.
  std::size_t replay_every = 1;
};

/// Re-checks every record of a triplet index: files present and readable,
/// sparse points at label positions with bit-equal values, masks legal,
/// per-entry and per-sampler counts, and provenance replay on the chosen
/// subset. Throws only when the index itself cannot be read.
ValidationReport run_validate(const std::filesystem::path& index_path,
                              const ValidateOptions& options = {});

nlohmann::json to_json(const ValidationReport& report);

}  // namespace depthsynth
