#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "s2m/cardio_metrics.hpp"
#include "s2m/deformation_ot.hpp"
#include "s2m/echo_synth.hpp"
#include "s2m/field_fusion.hpp"
#include "s2m/geometry.hpp"
#include "s2m/view_slicer.hpp"

namespace s2m::io {

namespace fs = std::filesystem;

// Point clouds: CSV with header x,y,z or x,y,z,label.
LabeledCloud read_cloud_csv(const fs::path& path);
void write_cloud_csv(const fs::path& path, const LabeledCloud& cloud);

// PGM (P5, maxval 255).
void write_pgm(const fs::path& path, const BinaryMask& mask);
void write_pgm(const fs::path& path, const GrayImage& image);  // round(v·255)
BinaryMask read_mask_pgm(const fs::path& path, double pixel_size_mm);
GrayImage read_gray_pgm(const fs::path& path);

// View definitions: JSON array.
std::vector<ViewDefinition> read_views_json(const fs::path& path);
void write_views_json(const fs::path& path, const std::vector<ViewDefinition>& views);
std::string views_to_json(const std::vector<ViewDefinition>& views);
std::vector<ViewDefinition> views_from_json(const std::string& text);

// Deformation artifacts.
void write_samples_csv(const fs::path& path, const DeformationSamples& samples);
DeformationSamples read_samples_csv(const fs::path& path);
void write_rbf_json(const fs::path& path, const RBFField& field);
RBFField read_rbf_json(const fs::path& path);
void write_diagnostics_json(const fs::path& path, const AssignmentMatrix& plan);

// VectorGrid binary.
void write_grid(const fs::path& path, const VectorGrid& grid);
VectorGrid read_grid(const fs::path& path);

// Clinical tables.
std::vector<PatientRecord> read_patients_csv(const fs::path& path);

struct VolumeRow {
  std::string patient_id;
  double edv_mm3 = 0.0;
  double esv_mm3 = 0.0;
};
/// CSV header patient_id,edv_mm3,esv_mm3.
std::vector<VolumeRow> read_volumes_csv(const fs::path& path);

/// Volumes are empty when the EF was supplied precomputed.
struct ReportRow {
  std::string patient_id;
  std::optional<double> edv_mm3;
  std::optional<double> esv_mm3;
  std::optional<double> sv_mm3;
  double ef_percent = 0.0;
};
void write_report_csv(const fs::path& path, const std::vector<ReportRow>& rows);

void write_loss_report_json(const fs::path& path, const LossReport& report);

/// Whole-file contents; IoError when unreadable.
std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

/// 64-bit FNV-1a over the file bytes, as 16 lowercase hex digits.
std::string file_checksum(const fs::path& path);

}  // namespace s2m::io
