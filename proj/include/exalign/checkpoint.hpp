#pragma once

#include <filesystem>

#include "exalign/model.hpp"

namespace exalign {

inline constexpr int kCheckpointFormatVersion = 1;

/// Self-describing JSON container: format version, hyperparameters,
/// vocabulary, the frozen embedding table, every trainable parameter with
/// shape metadata, and the calibrated threshold when present. Values
/// round-trip bit-exactly.
void save_model(const std::filesystem::path& path, const Model& model);

/// Throws std::runtime_error on unreadable files, malformed content, or a
/// format-version mismatch.
Model load_model(const std::filesystem::path& path);

}  // namespace exalign
