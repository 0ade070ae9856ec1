#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "s2m/echo_synth.hpp"
#include "s2m/error.hpp"
#include "s2m/field_fusion.hpp"
#include "s2m/view_slicer.hpp"

namespace s2m::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

/// Unusable config; the CLI maps it to exit code 2.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum ExitCode : int { kClean = 0, kBadConfig = 2, kItemFailures = 3 };

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-image pose variation, drawn uniformly from each range. Rotation and
/// scaling pivot about the cloud centroid.
struct JitterRanges {
  std::array<Range, 3> delta_mm{};
  std::array<Range, 3> theta_deg{};
  Range scale{1.0, 1.0};
};

struct OtConfig {
  std::optional<double> tau_sq;    ///< default (0.1·diag)² per pair
  std::optional<double> sigma_sq;  ///< default (0.01·diag)² per pair
  int max_iter = 1000;
  double tol = 1e-6;
  double anneal = 0.7;
};

struct RbfConfig {
  std::optional<double> bandwidth_mm;  ///< default 4 × mean NN spacing
  double ridge = 1e-8;
};

struct EvalPair {
  std::string id;
  fs::path pred;
  fs::path target;
};

struct PatientClouds {
  std::string patient_id;
  fs::path ed;
  fs::path es;
};

struct ClinicalConfig {
  std::vector<int> lv_labels;
  double subsample_rate = 0.1;
  std::vector<PatientClouds> patients;
  fs::path volumes_csv;
};

struct PipelineConfig {
  std::optional<std::uint64_t> seed;  ///< required, from the file or --seed
  fs::path output_dir;
  fs::path corpus_dir;
  fs::path template_path;
  fs::path patients_csv;
  fs::path masks_dir;  ///< pseudo input; default <output_dir>/masks
  std::optional<std::vector<ViewDefinition>> views;  ///< nullopt = built-in
  std::vector<int> aim_atria_labels;
  JitterRanges jitter;
  RasterSpec raster;
  double blur_sigma_px = 2.0;
  double noise_sigma = 0.1;
  OtConfig ot;
  RbfConfig rbf;
  GridShape grid{16, 16, 16};
  std::size_t eval_resolution = 128;
  std::vector<EvalPair> eval_pairs;
  ClinicalConfig clinical;

  /// Range ordering, numeric domains and existence of every referenced input path.
  void validate() const;
  std::vector<ViewDefinition> effective_views() const;
};

/// Parse a config document. Relative paths resolve against `base_dir`. A run
/// manifest is accepted too; its config snapshot is used. Throws ConfigError.
PipelineConfig parse_config(const json& doc, const fs::path& base_dir);
PipelineConfig load_config(const fs::path& path);

/// Every field with defaults filled in; paths absolute.
json materialize(const PipelineConfig& cfg);

struct OutputFile {
  std::string path;  ///< relative to the output dir
  std::string checksum;
};

struct ItemRecord {
  std::string key;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  json details = json::object();
  std::vector<OutputFile> outputs;
};

struct RunManifest {
  std::string command;
  json config;
  std::vector<ItemRecord> items;  ///< sorted by key
  std::vector<OutputFile> outputs;  ///< run-level outputs (tables, summaries)

  std::size_t failures() const;
  json to_json() const;
};

struct RunOptions {
  int jobs = 1;
};

/// Each command writes its outputs and <output_dir>/manifest_<command>.json.
RunManifest cmd_slice(const PipelineConfig& cfg, const RunOptions& opt);
RunManifest cmd_pseudo(const PipelineConfig& cfg, const RunOptions& opt);
RunManifest cmd_deform(const PipelineConfig& cfg, const RunOptions& opt);
RunManifest cmd_eval(const PipelineConfig& cfg, const RunOptions& opt);
RunManifest cmd_clinical(const PipelineConfig& cfg, const RunOptions& opt);

/// Synthetic corpus: `count` perturbed toy hearts plus a template, written as
/// labeled cloud CSVs under <dir>/corpus and <dir>/template.csv.
RunManifest cmd_synth(const fs::path& dir, std::size_t count, std::size_t points, std::uint64_t seed);

/// Transform a draw from `jitter` produces for one item seed.
struct JitterDraw {
  Vec3 delta_mm;
  Vec3 theta_deg;
  double scale = 1.0;
};
JitterDraw draw_jitter(const JitterRanges& jitter, std::uint64_t item_seed);
/// p → s·R·(p − c) + c + Δ, expressed as the equivalent SimilarityTransform.
SimilarityTransform pivoted_transform(const JitterDraw& draw, const Vec3& pivot);

std::string version();

}  // namespace s2m::pipeline
