#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "calib/core.hpp"

namespace calib {

enum class PredictionFormat { csv_logits, csv_probs };

/// Reads the canonical prediction CSV: header `id,label,s_0,...,s_{k-1}`
/// (the id column is optional), one example per row. Scores are interpreted
/// per format and the result passes through validate().
PredictionSet load_predictions(const std::filesystem::path& path, PredictionFormat format);

/// Writes the canonical CSV with an id column (example_ids, or the row index
/// when the set carries none). Scores use 17 significant digits, enough to
/// round-trip doubles exactly. The write is atomic (temp file + rename).
void write_predictions(const PredictionSet& preds, const std::filesystem::path& path);

/// One id per line; blank lines ignored.
std::vector<std::string> load_id_list(const std::filesystem::path& path);

/// Atomic text write used by every emitter: write to a temp file in the same
/// directory, then rename over the target.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

/// Formats a double with 17 significant digits (lossless round trip).
std::string format_double(double value);

}  // namespace calib
