#include "s2m/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "s2m/error.hpp"
#include "s2m/rng.hpp"

namespace s2m::io {

using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string file_checksum(const fs::path& path) {
  const std::string bytes = read_text(path);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CsvRows {
  std::vector<std::string_view> header;
  std::vector<std::vector<std::string_view>> rows;
  std::vector<std::size_t> line_numbers;
};

// Views into `text`, which must outlive the result.
CsvRows parse_csv(const std::string& text, const fs::path& path) {
  CsvRows csv;
  std::string_view rest = text;
  if (rest.starts_with("\xEF\xBB\xBF")) rest.remove_prefix(3);
  std::size_t line_no = 0;
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    const std::string_view line = trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (csv.header.empty()) {
      csv.header = split(line);
      continue;
    }
    csv.rows.push_back(split(line));
    csv.line_numbers.push_back(line_no);
  }
  if (csv.header.empty()) throw IoError(path.string() + ": missing CSV header");
  return csv;
}

[[noreturn]] void bad_field(const fs::path& path, std::size_t line, std::string_view what) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": " + std::string(what));
}

double parse_double(std::string_view s, const fs::path& path, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    bad_field(path, line, "not a finite number: '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, const fs::path& path, std::size_t line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) bad_field(path, line, "not an integer: '" + std::string(s) + "'");
  return v;
}

void expect_header(const CsvRows& csv, std::initializer_list<std::string_view> names, const fs::path& path) {
  if (csv.header.size() != names.size() || !std::equal(names.begin(), names.end(), csv.header.begin())) {
    std::string want;
    for (auto n : names) want += (want.empty() ? "" : ",") + std::string(n);
    throw IoError(path.string() + ": expected header " + want);
  }
}

void check_width(const CsvRows& csv, std::size_t r, const fs::path& path) {
  if (csv.rows[r].size() != csv.header.size()) bad_field(path, csv.line_numbers[r], "wrong number of fields");
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 json_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw IoError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void write_pgm_bytes(const fs::path& path, std::size_t w, std::size_t h, const std::vector<std::uint8_t>& px) {
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.append(px.begin(), px.end());
  write_text(path, out);
}

struct PgmData {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

PgmData read_pgm_bytes(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip_ws();
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), v);
    if (ec != std::errc{}) throw IoError(path.string() + ": malformed PGM header");
    pos = static_cast<std::size_t>(ptr - bytes.data());
    return v;
  };
  if (bytes.compare(0, 2, "P5") != 0) throw IoError(path.string() + ": not a binary PGM");
  pos = 2;
  PgmData d;
  d.width = number();
  d.height = number();
  if (number() != 255) throw IoError(path.string() + ": PGM maxval must be 255");
  ++pos;  // single whitespace before the raster
  if (bytes.size() - std::min(pos, bytes.size()) != d.width * d.height) {
    throw IoError(path.string() + ": PGM raster size mismatch");
  }
  d.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return d;
}

template <class T>
void put_le(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos, const fs::path& path) {
  if (pos + sizeof(T) > in.size()) throw IoError(path.string() + ": truncated grid file");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

LabeledCloud read_cloud_csv(const fs::path& path) {
  const std::string text = read_text(path);
  const CsvRows csv = parse_csv(text, path);
  const bool labeled = csv.header.size() == 4;
  if (labeled) {
    expect_header(csv, {"x", "y", "z", "label"}, path);
  } else {
    expect_header(csv, {"x", "y", "z"}, path);
  }
  std::vector<Vec3> pts;
  std::vector<int> labels;
  pts.reserve(csv.rows.size());
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    check_width(csv, r, path);
    const auto& f = csv.rows[r];
    const std::size_t ln = csv.line_numbers[r];
    pts.push_back({parse_double(f[0], path, ln), parse_double(f[1], path, ln), parse_double(f[2], path, ln)});
    if (labeled) labels.push_back(parse_int(f[3], path, ln));
  }
  try {
    return labeled ? LabeledCloud(std::move(pts), std::move(labels)) : LabeledCloud(std::move(pts));
  } catch (const InvalidArgument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_cloud_csv(const fs::path& path, const LabeledCloud& cloud) {
  std::string out = cloud.has_labels() ? "x,y,z,label\n" : "x,y,z\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.point(i);
    out += fmt6(p.x) + "," + fmt6(p.y) + "," + fmt6(p.z);
    if (cloud.has_labels()) out += "," + std::to_string(cloud.label(i));
    out += "\n";
  }
  write_text(path, out);
}

void write_pgm(const fs::path& path, const BinaryMask& mask) { write_pgm_bytes(path, mask.width, mask.height, mask.pixels); }

void write_pgm(const fs::path& path, const GrayImage& image) {
  std::vector<std::uint8_t> px(image.intensities.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double v = std::clamp(image.intensities[i], 0.0, 1.0);
    px[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  write_pgm_bytes(path, image.width, image.height, px);
}

BinaryMask read_mask_pgm(const fs::path& path, double pixel_size_mm) {
  PgmData d = read_pgm_bytes(path);
  for (auto v : d.pixels) {
    if (v != 0 && v != 255) throw IoError(path.string() + ": mask pixels must be 0 or 255");
  }
  return BinaryMask{d.width, d.height, pixel_size_mm, std::move(d.pixels)};
}

GrayImage read_gray_pgm(const fs::path& path) {
  const PgmData d = read_pgm_bytes(path);
  GrayImage g{d.width, d.height, std::vector<double>(d.pixels.size())};
  for (std::size_t i = 0; i < d.pixels.size(); ++i) g.intensities[i] = d.pixels[i] / 255.0;
  return g;
}

std::string views_to_json(const std::vector<ViewDefinition>& views) {
  json arr = json::array();
  for (const ViewDefinition& v : views) {
    arr.push_back({{"name", std::string(to_string(v.name))},
                   {"origin", vec_json(v.origin)},
                   {"axis", vec_json(v.axis)},
                   {"up", vec_json(v.up)},
                   {"half_angle_deg", v.half_angle_deg},
                   {"depth_mm", v.depth_mm},
                   {"slab_half_thickness_mm", v.slab_half_thickness_mm}});
  }
  return arr.dump(2) + "\n";
}

std::vector<ViewDefinition> views_from_json(const std::string& text) {
  std::vector<ViewDefinition> views;
  try {
    const json arr = json::parse(text);
    if (!arr.is_array()) throw IoError("view definitions must be a JSON array");
    for (const json& o : arr) {
      ViewDefinition v;
      v.name = parse_view_name(o.at("name").get<std::string>());
      v.origin = json_vec(o.at("origin"));
      v.axis = json_vec(o.at("axis"));
      v.up = json_vec(o.at("up"));
      v.half_angle_deg = o.at("half_angle_deg").get<double>();
      v.depth_mm = o.at("depth_mm").get<double>();
      v.slab_half_thickness_mm = o.at("slab_half_thickness_mm").get<double>();
      v.validate();
      views.push_back(v);
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("view definitions: ") + e.what());
  }
  return views;
}

std::vector<ViewDefinition> read_views_json(const fs::path& path) { return views_from_json(read_text(path)); }

void write_views_json(const fs::path& path, const std::vector<ViewDefinition>& views) {
  write_text(path, views_to_json(views));
}

void write_samples_csv(const fs::path& path, const DeformationSamples& samples) {
  samples.validate();
  std::string out = "px,py,pz,vx,vy,vz\n";
  for (std::size_t i = 0; i < samples.anchors.size(); ++i) {
    const Vec3& p = samples.anchors[i];
    const Vec3& v = samples.vectors[i];
    out += fmt6(p.x) + "," + fmt6(p.y) + "," + fmt6(p.z) + "," + fmt6(v.x) + "," + fmt6(v.y) + "," + fmt6(v.z) + "\n";
  }
  write_text(path, out);
}

DeformationSamples read_samples_csv(const fs::path& path) {
  const std::string text = read_text(path);
  const CsvRows csv = parse_csv(text, path);
  expect_header(csv, {"px", "py", "pz", "vx", "vy", "vz"}, path);
  DeformationSamples s;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    check_width(csv, r, path);
    const auto& f = csv.rows[r];
    const std::size_t ln = csv.line_numbers[r];
    s.anchors.push_back({parse_double(f[0], path, ln), parse_double(f[1], path, ln), parse_double(f[2], path, ln)});
    s.vectors.push_back({parse_double(f[3], path, ln), parse_double(f[4], path, ln), parse_double(f[5], path, ln)});
  }
  return s;
}

void write_rbf_json(const fs::path& path, const RBFField& field) {
  json centers = json::array(), coefs = json::array();
  for (const Vec3& c : field.centers) centers.push_back(vec_json(c));
  for (const Vec3& c : field.coefficients) coefs.push_back(vec_json(c));
  const json j = {{"bandwidth_mm", field.bandwidth},
                  {"ridge", field.ridge},
                  {"centers", std::move(centers)},
                  {"coefficients", std::move(coefs)}};
  write_text(path, j.dump() + "\n");
}

RBFField read_rbf_json(const fs::path& path) {
  RBFField f;
  try {
    const json j = json::parse(read_text(path));
    f.bandwidth = j.at("bandwidth_mm").get<double>();
    f.ridge = j.at("ridge").get<double>();
    for (const json& c : j.at("centers")) f.centers.push_back(json_vec(c));
    for (const json& c : j.at("coefficients")) f.coefficients.push_back(json_vec(c));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  f.validate();
  return f;
}

void write_diagnostics_json(const fs::path& path, const AssignmentMatrix& plan) {
  const json j = {{"iterations_used", plan.iterations_used},
                  {"converged", plan.converged},
                  {"final_update", plan.final_update},
                  {"objective", plan.objective}};
  write_text(path, j.dump(2) + "\n");
}

void write_grid(const fs::path& path, const VectorGrid& grid) {
  const GridShape s = grid.shape();
  const Aabb& b = grid.bbox();
  std::string out = "S2MF";
  out.reserve(4 + 12 + 24 + s.nodes() * 12);
  for (std::size_t n : {s.d, s.h, s.w}) put_le(out, static_cast<std::uint32_t>(n));
  for (double v : {b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z}) put_le(out, static_cast<float>(v));
  for (const Vec3& v : grid.values()) {
    put_le(out, static_cast<float>(v.x));
    put_le(out, static_cast<float>(v.y));
    put_le(out, static_cast<float>(v.z));
  }
  write_text(path, out);
}

VectorGrid read_grid(const fs::path& path) {
  const std::string in = read_text(path);
  if (in.compare(0, 4, "S2MF") != 0) throw IoError(path.string() + ": bad grid magic");
  std::size_t pos = 4;
  GridShape s;
  s.d = get_le<std::uint32_t>(in, pos, path);
  s.h = get_le<std::uint32_t>(in, pos, path);
  s.w = get_le<std::uint32_t>(in, pos, path);
  std::array<double, 6> bb{};
  for (double& v : bb) v = get_le<float>(in, pos, path);
  if (in.size() - pos != s.nodes() * 12) throw IoError(path.string() + ": grid payload size mismatch");
  std::vector<Vec3> values(s.nodes());
  for (Vec3& v : values) {
    v.x = get_le<float>(in, pos, path);
    v.y = get_le<float>(in, pos, path);
    v.z = get_le<float>(in, pos, path);
  }
  return VectorGrid(s, Aabb{{bb[0], bb[1], bb[2]}, {bb[3], bb[4], bb[5]}}, std::move(values));
}

std::vector<PatientRecord> read_patients_csv(const fs::path& path) {
  const std::string text = read_text(path);
  const CsvRows csv = parse_csv(text, path);
  expect_header(csv, {"patient_id", "glps", "ef"}, path);
  std::vector<PatientRecord> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    check_width(csv, r, path);
    const auto& f = csv.rows[r];
    const std::size_t ln = csv.line_numbers[r];
    PatientRecord p;
    p.patient_id = std::string(f[0]);
    if (p.patient_id.empty()) bad_field(path, ln, "empty patient_id");
    if (!f[1].empty()) p.glps = parse_double(f[1], path, ln);
    if (!f[2].empty()) {
      p.ef = parse_double(f[2], path, ln);
      if (*p.ef < 0.0 || *p.ef > 1.0) bad_field(path, ln, "ef must be a fraction in [0, 1]");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<VolumeRow> read_volumes_csv(const fs::path& path) {
  const std::string text = read_text(path);
  const CsvRows csv = parse_csv(text, path);
  expect_header(csv, {"patient_id", "edv_mm3", "esv_mm3"}, path);
  std::vector<VolumeRow> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    check_width(csv, r, path);
    const auto& f = csv.rows[r];
    const std::size_t ln = csv.line_numbers[r];
    out.push_back({std::string(f[0]), parse_double(f[1], path, ln), parse_double(f[2], path, ln)});
  }
  return out;
}

void write_report_csv(const fs::path& path, const std::vector<ReportRow>& rows) {
  std::string out = "patient_id,edv_mm3,esv_mm3,sv_mm3,ef_percent\n";
  for (const ReportRow& r : rows) {
    auto opt = [](const std::optional<double>& v) { return v ? fmt6(*v) : std::string(); };
    out += r.patient_id + "," + opt(r.edv_mm3) + "," + opt(r.esv_mm3) + "," + opt(r.sv_mm3) + "," + fmt6(r.ef_percent) +
           "\n";
  }
  write_text(path, out);
}

void write_loss_report_json(const fs::path& path, const LossReport& r) {
  const json j = {{"gan_xy", r.gan_xy}, {"gan_yx", r.gan_yx}, {"cycle", r.cycle}, {"lambda", r.lambda}, {"total", r.total}};
  write_text(path, j.dump(2) + "\n");
}

}  // namespace s2m::io
