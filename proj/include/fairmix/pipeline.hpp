#pragma once

// File-based pipeline: prepare -> train-embed -> debias -> evaluate. Every
// stage reads the previous stage's artifacts from the output directory and
// writes a <stage>.meta key-value file stamped with the config hash.

#include "fairmix/evaluation.hpp"
#include "fairmix/fair_projection.hpp"
#include "fairmix/io.hpp"
#include "fairmix/mixed_encoder.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fairmix {

struct PipelineConfig {
  std::string dataset;
  std::filesystem::path data;
  std::filesystem::path schema;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  double test_fraction = 0.5;
  MixedEncoderConfig encoder;
  FairProjectionConfig projection;
  std::vector<std::string> sensitive;  // attributes removed by debias; empty = all
  ProbeOptions probe;

  /// Paths in the file are resolved against the file's directory.
  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig parse(std::string_view text, const std::filesystem::path& base_dir, const std::string& source);

  /// Canonical key-value form (output directory excluded).
  std::string canonical() const;
  std::string hash() const;
};

/// Seeds derived from the master seed.
std::uint64_t split_seed(const PipelineConfig& config);
std::uint64_t encoder_seed(const PipelineConfig& config);

struct StageArtifacts {
  std::vector<std::string> files;  // relative to the output directory
  KeyValues meta;
};

StageArtifacts cmd_prepare(const PipelineConfig& config);
StageArtifacts cmd_train_embed(const PipelineConfig& config);
StageArtifacts cmd_debias(const PipelineConfig& config);
StageArtifacts cmd_evaluate(const PipelineConfig& config);

struct ArtifactEntry {
  std::string path;
  std::string hash;
};

struct RunManifest {
  std::string config_hash;
  std::vector<ArtifactEntry> artifacts;
  KeyValues timings;    // seconds per stage
  KeyValues summaries;  // loss and report summaries

  std::string to_string() const;
  /// Same as to_string() without the timing block.
  std::string deterministic_part() const;
};

RunManifest cmd_pipeline(const PipelineConfig& config);

/// Names of the artifacts each stage writes.
namespace artifact {
inline constexpr const char* x_num = "x_num.mat";
inline constexpr const char* x_cat = "x_cat.mat";
inline constexpr const char* s = "s.mat";
inline constexpr const char* y = "y.mat";
inline constexpr const char* levels = "levels.txt";
inline constexpr const char* split = "split.txt";
inline constexpr const char* prepare_meta = "prepare.meta";
inline constexpr const char* model_num_cat = "model_num_cat.txt";
inline constexpr const char* model_cat_num = "model_cat_num.txt";
inline constexpr const char* z = "z.mat";
inline constexpr const char* history_num_cat = "history_num_cat.csv";
inline constexpr const char* history_cat_num = "history_cat_num.csv";
inline constexpr const char* embed_meta = "embed.meta";
inline constexpr const char* z_hat = "z_hat.mat";
inline constexpr const char* debias_meta = "debias.meta";
inline constexpr const char* report_biased = "report_biased.csv";
inline constexpr const char* report_debiased = "report_debiased.csv";
inline constexpr const char* roc_biased = "roc_biased.csv";
inline constexpr const char* roc_debiased = "roc_debiased.csv";
inline constexpr const char* evaluate_meta = "evaluate.meta";
inline constexpr const char* manifest = "manifest.txt";
}  // namespace artifact

/// Loads the prepared dataset artifacts from `dir`.
EncodedDataset load_prepared(const std::filesystem::path& dir);

/// Parses a report CSV written by cmd_evaluate.
FairnessReport parse_report(std::string_view text, const std::string& source);

}  // namespace fairmix
