#include "s2m/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <random>
#include <set>

#include "s2m/cardio_metrics.hpp"
#include "s2m/deformation_ot.hpp"
#include "s2m/io.hpp"
#include "s2m/rng.hpp"
#include "s2m/synthetic.hpp"

#ifndef S2M_VERSION
#define S2M_VERSION "0.0.0"
#endif

namespace s2m::pipeline {

std::string version() { return S2M_VERSION; }

// ---------------------------------------------------------------------------
// Logging: S2M_LOG = error | warn | info | debug (default warn).

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
  static const Level level = [] {
    const char* env = std::getenv("S2M_LOG");
    if (env == nullptr) return Level::Warn;
    const std::string s(env);
    if (s == "error") return Level::Error;
    if (s == "info") return Level::Info;
    if (s == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

void log(Level level, const std::string& msg) {
  if (level > log_level()) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
#pragma omp critical(s2m_log)
  std::cerr << "[s2m] " << names[static_cast<int>(level)] << ": " << msg << '\n';
}

// ---------------------------------------------------------------------------
// Config parsing.

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      config_error(where, "unknown key '" + key + "'");
    }
  }
}

template <class T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "." + key, e.what());
  }
}

template <class T>
void read_opt(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read_opt(obj, key, v, where);
  out = v;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

void read_path(const json& obj, const char* key, fs::path& out, const fs::path& base, const std::string& where) {
  std::string s;
  read_opt(obj, key, s, where);
  if (!s.empty()) out = resolve(base, s);
}

Range parse_range(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    config_error(where, "expected [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::array<Range, 3> parse_range3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) config_error(where, "expected three [lo, hi] ranges (x, y, z)");
  return {parse_range(j[0], where + "[0]"), parse_range(j[1], where + "[1]"), parse_range(j[2], where + "[2]")};
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

json range3_json(const std::array<Range, 3>& r) {
  return json::array({range_json(r[0]), range_json(r[1]), range_json(r[2])});
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string path_str(const fs::path& p) { return p.empty() ? std::string() : p.generic_string(); }

}  // namespace

PipelineConfig parse_config(const json& input, const fs::path& base_dir) {
  const json& doc = input.is_object() && input.contains("manifest_version") ? input.at("config") : input;
  check_keys(doc, "config",
             {"seed", "output_dir", "inputs", "views", "aim_atria_labels", "jitter", "raster", "noise", "ot", "rbf",
              "grid", "eval", "clinical"});
  PipelineConfig c;
  const fs::path base = fs::absolute(base_dir);

  read_opt(doc, "seed", c.seed, "config");
  read_path(doc, "output_dir", c.output_dir, base, "config");

  if (doc.contains("inputs")) {
    const json& in = doc.at("inputs");
    check_keys(in, "inputs", {"corpus_dir", "template", "patients_csv", "masks_dir"});
    read_path(in, "corpus_dir", c.corpus_dir, base, "inputs");
    read_path(in, "template", c.template_path, base, "inputs");
    read_path(in, "patients_csv", c.patients_csv, base, "inputs");
    read_path(in, "masks_dir", c.masks_dir, base, "inputs");
  }

  if (doc.contains("views")) {
    const json& v = doc.at("views");
    if (v.is_string()) {
      if (v.get<std::string>() != "builtin") config_error("views", "expected \"builtin\" or an array");
    } else {
      try {
        c.views = io::views_from_json(v.dump());
      } catch (const Error& e) {
        config_error("views", e.what());
      }
    }
  }
  read_opt(doc, "aim_atria_labels", c.aim_atria_labels, "config");

  if (doc.contains("jitter")) {
    const json& j = doc.at("jitter");
    check_keys(j, "jitter", {"delta_mm", "theta_deg", "scale"});
    if (j.contains("delta_mm")) c.jitter.delta_mm = parse_range3(j.at("delta_mm"), "jitter.delta_mm");
    if (j.contains("theta_deg")) c.jitter.theta_deg = parse_range3(j.at("theta_deg"), "jitter.theta_deg");
    if (j.contains("scale")) c.jitter.scale = parse_range(j.at("scale"), "jitter.scale");
  }
  if (doc.contains("raster")) {
    const json& r = doc.at("raster");
    check_keys(r, "raster", {"width", "height", "pixel_size_mm"});
    read_opt(r, "width", c.raster.width, "raster");
    read_opt(r, "height", c.raster.height, "raster");
    read_opt(r, "pixel_size_mm", c.raster.pixel_size_mm, "raster");
  }
  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    check_keys(n, "noise", {"blur_sigma_px", "noise_sigma"});
    read_opt(n, "blur_sigma_px", c.blur_sigma_px, "noise");
    read_opt(n, "noise_sigma", c.noise_sigma, "noise");
  }
  if (doc.contains("ot")) {
    const json& o = doc.at("ot");
    check_keys(o, "ot", {"tau_sq", "sigma_sq", "max_iter", "tol", "anneal"});
    read_opt(o, "tau_sq", c.ot.tau_sq, "ot");
    read_opt(o, "sigma_sq", c.ot.sigma_sq, "ot");
    read_opt(o, "max_iter", c.ot.max_iter, "ot");
    read_opt(o, "tol", c.ot.tol, "ot");
    read_opt(o, "anneal", c.ot.anneal, "ot");
  }
  if (doc.contains("rbf")) {
    const json& r = doc.at("rbf");
    check_keys(r, "rbf", {"bandwidth_mm", "ridge"});
    read_opt(r, "bandwidth_mm", c.rbf.bandwidth_mm, "rbf");
    read_opt(r, "ridge", c.rbf.ridge, "rbf");
  }
  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    check_keys(g, "grid", {"d", "h", "w"});
    read_opt(g, "d", c.grid.d, "grid");
    read_opt(g, "h", c.grid.h, "grid");
    read_opt(g, "w", c.grid.w, "grid");
  }
  if (doc.contains("eval")) {
    const json& e = doc.at("eval");
    check_keys(e, "eval", {"resolution", "pairs"});
    read_opt(e, "resolution", c.eval_resolution, "eval");
    if (e.contains("pairs")) {
      if (!e.at("pairs").is_array()) config_error("eval.pairs", "expected an array");
      std::size_t k = 0;
      for (const json& p : e.at("pairs")) {
        const std::string where = "eval.pairs[" + std::to_string(k) + "]";
        check_keys(p, where, {"id", "pred", "target"});
        EvalPair pair;
        read_opt(p, "id", pair.id, where);
        if (pair.id.empty()) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "pair%04zu", k);
          pair.id = buf;
        }
        read_path(p, "pred", pair.pred, base, where);
        read_path(p, "target", pair.target, base, where);
        if (pair.pred.empty() || pair.target.empty()) config_error(where, "needs pred and target");
        c.eval_pairs.push_back(std::move(pair));
        ++k;
      }
    }
  }
  if (doc.contains("clinical")) {
    const json& cl = doc.at("clinical");
    check_keys(cl, "clinical", {"lv_labels", "subsample_rate", "patients", "volumes_csv"});
    read_opt(cl, "lv_labels", c.clinical.lv_labels, "clinical");
    read_opt(cl, "subsample_rate", c.clinical.subsample_rate, "clinical");
    read_path(cl, "volumes_csv", c.clinical.volumes_csv, base, "clinical");
    if (cl.contains("patients")) {
      if (!cl.at("patients").is_array()) config_error("clinical.patients", "expected an array");
      std::size_t k = 0;
      for (const json& p : cl.at("patients")) {
        const std::string where = "clinical.patients[" + std::to_string(k++) + "]";
        check_keys(p, where, {"patient_id", "ed", "es"});
        PatientClouds pc;
        read_opt(p, "patient_id", pc.patient_id, where);
        read_path(p, "ed", pc.ed, base, where);
        read_path(p, "es", pc.es, base, where);
        if (pc.patient_id.empty() || pc.ed.empty() || pc.es.empty()) config_error(where, "needs patient_id, ed, es");
        c.clinical.patients.push_back(std::move(pc));
      }
    }
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, fs::absolute(path).parent_path());
}

void PipelineConfig::validate() const {
  if (!seed) throw ConfigError("seed: missing (set it in the config or pass --seed)");
  if (output_dir.empty()) throw ConfigError("output_dir: missing (set it in the config or pass --out)");
  auto must_exist = [](const fs::path& p, const std::string& what) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError(what + ": path does not exist: " + p.string());
  };
  must_exist(corpus_dir, "inputs.corpus_dir");
  must_exist(template_path, "inputs.template");
  must_exist(patients_csv, "inputs.patients_csv");
  must_exist(clinical.volumes_csv, "clinical.volumes_csv");
  for (const EvalPair& p : eval_pairs) {
    must_exist(p.pred, "eval.pairs." + p.id + ".pred");
    must_exist(p.target, "eval.pairs." + p.id + ".target");
  }
  for (const PatientClouds& p : clinical.patients) {
    must_exist(p.ed, "clinical.patients." + p.patient_id + ".ed");
    must_exist(p.es, "clinical.patients." + p.patient_id + ".es");
  }

  auto ordered = [](const Range& r, const std::string& what) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) throw ConfigError(what + ": need lo <= hi");
  };
  for (int k = 0; k < 3; ++k) {
    ordered(jitter.delta_mm[k], "jitter.delta_mm");
    ordered(jitter.theta_deg[k], "jitter.theta_deg");
  }
  ordered(jitter.scale, "jitter.scale");
  if (!(jitter.scale.lo > 0.0)) throw ConfigError("jitter.scale: scale must be > 0");

  try {
    raster.validate();
    NoiseParams{blur_sigma_px, noise_sigma, 0}.validate();
    for (const ViewDefinition& v : effective_views()) v.validate();
    OTParams p{ot.tau_sq.value_or(1.0), ot.sigma_sq.value_or(1.0), ot.max_iter, ot.tol, ot.anneal};
    p.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (rbf.bandwidth_mm && !(*rbf.bandwidth_mm > 0.0)) throw ConfigError("rbf.bandwidth_mm must be > 0");
  if (!(rbf.ridge >= 0.0)) throw ConfigError("rbf.ridge must be >= 0");
  if (grid.d < 1 || grid.h < 1 || grid.w < 1) throw ConfigError("grid: dims must be >= 1");
  if (eval_resolution < 1) throw ConfigError("eval.resolution must be >= 1");
  if (!(clinical.subsample_rate > 0.0 && clinical.subsample_rate <= 1.0)) {
    throw ConfigError("clinical.subsample_rate must be in (0, 1]");
  }
  std::set<std::string> ids;
  for (const EvalPair& p : eval_pairs) {
    if (!ids.insert(p.id).second) throw ConfigError("eval.pairs: duplicate id " + p.id);
  }
}

std::vector<ViewDefinition> PipelineConfig::effective_views() const { return views ? *views : builtin_views(); }

json materialize(const PipelineConfig& c) {
  json views = json::parse(io::views_to_json(c.effective_views()));
  json pairs = json::array();
  for (const EvalPair& p : c.eval_pairs) {
    pairs.push_back({{"id", p.id}, {"pred", path_str(p.pred)}, {"target", path_str(p.target)}});
  }
  json patients = json::array();
  for (const PatientClouds& p : c.clinical.patients) {
    patients.push_back({{"patient_id", p.patient_id}, {"ed", path_str(p.ed)}, {"es", path_str(p.es)}});
  }
  return {
      {"seed", opt_json(c.seed)},
      {"output_dir", path_str(c.output_dir)},
      {"inputs",
       {{"corpus_dir", path_str(c.corpus_dir)},
        {"template", path_str(c.template_path)},
        {"patients_csv", path_str(c.patients_csv)},
        {"masks_dir", path_str(c.masks_dir)}}},
      {"views", views},
      {"aim_atria_labels", c.aim_atria_labels},
      {"jitter",
       {{"delta_mm", range3_json(c.jitter.delta_mm)},
        {"theta_deg", range3_json(c.jitter.theta_deg)},
        {"scale", range_json(c.jitter.scale)}}},
      {"raster",
       {{"width", c.raster.width}, {"height", c.raster.height}, {"pixel_size_mm", c.raster.pixel_size_mm}}},
      {"noise", {{"blur_sigma_px", c.blur_sigma_px}, {"noise_sigma", c.noise_sigma}}},
      {"ot",
       {{"tau_sq", opt_json(c.ot.tau_sq)},
        {"sigma_sq", opt_json(c.ot.sigma_sq)},
        {"max_iter", c.ot.max_iter},
        {"tol", c.ot.tol},
        {"anneal", c.ot.anneal}}},
      {"rbf", {{"bandwidth_mm", opt_json(c.rbf.bandwidth_mm)}, {"ridge", c.rbf.ridge}}},
      {"grid", {{"d", c.grid.d}, {"h", c.grid.h}, {"w", c.grid.w}}},
      {"eval", {{"resolution", c.eval_resolution}, {"pairs", pairs}}},
      {"clinical",
       {{"lv_labels", c.clinical.lv_labels},
        {"subsample_rate", c.clinical.subsample_rate},
        {"patients", patients},
        {"volumes_csv", path_str(c.clinical.volumes_csv)}}},
  };
}

// ---------------------------------------------------------------------------
// Manifest.

std::size_t RunManifest::failures() const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const ItemRecord& r) { return !r.ok; }));
}

namespace {

json outputs_json(const std::vector<OutputFile>& files) {
  json arr = json::array();
  for (const OutputFile& f : files) arr.push_back({{"path", f.path}, {"checksum", f.checksum}});
  return arr;
}

}  // namespace

json RunManifest::to_json() const {
  json items_json = json::array();
  for (const ItemRecord& r : items) {
    json j = {{"key", r.key}, {"seed", r.seed}, {"status", r.ok ? "ok" : "failed"}};
    if (!r.ok) j["error"] = r.error;
    j["details"] = r.details;
    j["outputs"] = outputs_json(r.outputs);
    items_json.push_back(std::move(j));
  }
  return {{"manifest_version", 1},
          {"tool", "s2m"},
          {"version", version()},
          {"command", command},
          {"config", config},
          {"items", std::move(items_json)},
          {"outputs", outputs_json(outputs)},
          {"failures", failures()},
          {"checksum_algorithm", "fnv1a64"}};
}

// ---------------------------------------------------------------------------
// Jitter.

JitterDraw draw_jitter(const JitterRanges& j, std::uint64_t item_seed) {
  std::mt19937_64 gen(item_seed);
  // One draw per component even for degenerate ranges keeps the stream layout fixed.
  auto draw = [&](const Range& r) {
    const double u = std::generate_canonical<double, 53>(gen);
    return r.lo == r.hi ? r.lo : r.lo + (r.hi - r.lo) * u;
  };
  JitterDraw d;
  d.delta_mm = {draw(j.delta_mm[0]), draw(j.delta_mm[1]), draw(j.delta_mm[2])};
  d.theta_deg = {draw(j.theta_deg[0]), draw(j.theta_deg[1]), draw(j.theta_deg[2])};
  d.scale = draw(j.scale);
  return d;
}

SimilarityTransform pivoted_transform(const JitterDraw& d, const Vec3& pivot) {
  const Vec3 angles{deg_to_rad(d.theta_deg.x), deg_to_rad(d.theta_deg.y), deg_to_rad(d.theta_deg.z)};
  const RotationMatrix r = rotation_matrix(angles);
  return {pivot - r.apply(pivot * d.scale) + d.delta_mm, angles, d.scale};
}

// ---------------------------------------------------------------------------
// Commands.

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

OutputFile record_output(const fs::path& out_dir, const fs::path& file) {
  return {fs::relative(file, out_dir).generic_string(), io::file_checksum(file)};
}

std::vector<fs::path> list_corpus(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Runs f(i) for i in [0, n) on `jobs` threads. f returns its item records;
// exceptions are converted into a failed record under `fallback_key(i)`.
template <class F, class K>
std::vector<ItemRecord> run_items(std::size_t n, int jobs, F f, K fallback_key) {
  std::vector<std::vector<ItemRecord>> per(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs))
  for (long i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      per[k] = f(k);
    } catch (const std::exception& e) {
      ItemRecord r;
      r.key = fallback_key(k);
      r.ok = false;
      r.error = e.what();
      per[k] = {r};
    }
  }
  std::vector<ItemRecord> all;
  for (auto& v : per) {
    for (auto& r : v) {
      if (!r.ok) log(Level::Warn, r.key + ": " + r.error);
      all.push_back(std::move(r));
    }
  }
  std::sort(all.begin(), all.end(), [](const ItemRecord& a, const ItemRecord& b) { return a.key < b.key; });
  return all;
}

RunManifest finish(const std::string& command, const PipelineConfig& cfg, std::vector<ItemRecord> items,
                   std::vector<OutputFile> outputs = {}) {
  RunManifest m{command, materialize(cfg), std::move(items), std::move(outputs)};
  io::write_text(cfg.output_dir / ("manifest_" + command + ".json"), m.to_json().dump(2) + "\n");
  log(Level::Info, command + ": " + std::to_string(m.items.size()) + " items, " + std::to_string(m.failures()) +
                       " failed");
  return m;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::string image_name(const std::string& mesh, ViewName v) { return mesh + "_" + std::string(to_string(v)) + ".pgm"; }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

RunManifest cmd_slice(const PipelineConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  require(!cfg.corpus_dir.empty(), "inputs.corpus_dir: required by slice");
  const std::vector<fs::path> meshes = list_corpus(cfg.corpus_dir);
  const std::vector<ViewDefinition> views = cfg.effective_views();
  const fs::path out_dir = cfg.output_dir / "masks";
  fs::create_directories(out_dir);
  const std::uint64_t seed = *cfg.seed;

  auto items = run_items(
      meshes.size(), opt.jobs,
      [&](std::size_t m) {
        const std::string stem = meshes[m].stem().string();
        std::vector<ItemRecord> recs;
        std::optional<LabeledCloud> cloud;
        std::string load_error;
        try {
          cloud = io::read_cloud_csv(meshes[m]);
          if (cloud->empty()) throw IoError("mesh has no points");
        } catch (const std::exception& e) {
          load_error = e.what();
        }
        std::vector<ViewDefinition> mesh_views = views;
        if (cloud && !cfg.aim_atria_labels.empty()) {
          mesh_views = aim_apical_views(views, *cloud, cfg.aim_atria_labels);
        }
        for (const ViewDefinition& view : mesh_views) {
          ItemRecord r;
          r.key = "slice/" + stem + "/" + std::string(to_string(view.name));
          r.seed = derive_seed(seed, r.key);
          if (!cloud) {
            r.ok = false;
            r.error = "unreadable mesh: " + load_error;
            recs.push_back(std::move(r));
            continue;
          }
          try {
            const JitterDraw d = draw_jitter(cfg.jitter, r.seed);
            const Vec3 pivot = centroid(cloud->points());
            const SimilarityTransform t = pivoted_transform(d, pivot);
            const LabeledCloud moved = apply_transform(*cloud, t);
            const Rasterized img = rasterize(slice_cloud(moved, view), cfg.raster);
            const fs::path file = out_dir / image_name(stem, view.name);
            io::write_pgm(file, img.mask);
            r.outputs.push_back(record_output(cfg.output_dir, file));
            r.details = {{"mesh", path_str(meshes[m])},
                         {"view", std::string(to_string(view.name))},
                         {"jitter", {{"delta_mm", vec_json(d.delta_mm)},
                                     {"theta_deg", vec_json(d.theta_deg)},
                                     {"scale", d.scale},
                                     {"pivot", vec_json(pivot)}}},
                         {"transform", {{"delta_mm", vec_json(t.delta)},
                                        {"angles_rad", vec_json(t.angles)},
                                        {"scale", t.scale}}},
                         {"pixels_on", img.mask.count_on()},
                         {"points_dropped", img.dropped}};
          } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
          }
          recs.push_back(std::move(r));
        }
        return recs;
      },
      [&](std::size_t m) { return "slice/" + meshes[m].stem().string(); });
  return finish("slice", cfg, std::move(items));
}

RunManifest cmd_pseudo(const PipelineConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  const fs::path masks = cfg.masks_dir.empty() ? cfg.output_dir / "masks" : cfg.masks_dir;
  const std::vector<ViewDefinition> views = cfg.effective_views();
  auto view_of = [&](ViewName n) -> const ViewDefinition& {
    for (const ViewDefinition& v : views) {
      if (v.name == n) return v;
    }
    throw InvalidArgument("no view definition named " + std::string(to_string(n)));
  };

  // Expected (mesh, view) pairs when a corpus is configured; otherwise every mask present.
  struct Job {
    std::string stem;
    ViewName view;
  };
  std::vector<Job> jobs;
  if (!cfg.corpus_dir.empty()) {
    for (const fs::path& m : list_corpus(cfg.corpus_dir)) {
      for (const ViewDefinition& v : views) jobs.push_back({m.stem().string(), v.name});
    }
  } else {
    require(fs::is_directory(masks), "pseudo: mask directory does not exist: " + masks.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(masks)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      const std::string name = f.stem().string();
      const std::size_t us = name.rfind('_');
      if (us == std::string::npos) continue;
      try {
        jobs.push_back({name.substr(0, us), parse_view_name(name.substr(us + 1))});
      } catch (const InvalidArgument&) {
        log(Level::Warn, "pseudo: skipping " + f.string() + " (no view suffix)");
      }
    }
  }

  const fs::path out_dir = cfg.output_dir / "pseudo";
  fs::create_directories(out_dir);
  const std::uint64_t seed = *cfg.seed;
  auto key_of = [&](std::size_t k) { return "pseudo/" + jobs[k].stem + "/" + std::string(to_string(jobs[k].view)); };

  auto items = run_items(
      jobs.size(), opt.jobs,
      [&](std::size_t k) {
        ItemRecord r;
        r.key = key_of(k);
        r.seed = derive_seed(seed, r.key);
        const fs::path in = masks / image_name(jobs[k].stem, jobs[k].view);
        if (!fs::exists(in)) {
          r.ok = false;
          r.error = "missing mask " + in.string();
          return std::vector<ItemRecord>{r};
        }
        const BinaryMask mask = io::read_mask_pgm(in, cfg.raster.pixel_size_mm);
        const NoiseParams params{cfg.blur_sigma_px, cfg.noise_sigma, r.seed};
        const GrayImage img = pseudo_image(mask, view_of(jobs[k].view), params);
        const fs::path file = out_dir / image_name(jobs[k].stem, jobs[k].view);
        io::write_pgm(file, img);
        r.outputs.push_back(record_output(cfg.output_dir, file));
        r.details = {{"mask", path_str(in)}, {"mask_checksum", io::file_checksum(in)}};
        return std::vector<ItemRecord>{r};
      },
      key_of);
  return finish("pseudo", cfg, std::move(items));
}

RunManifest cmd_deform(const PipelineConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  require(!cfg.template_path.empty(), "inputs.template: required by deform");
  require(!cfg.corpus_dir.empty(), "inputs.corpus_dir: required by deform");
  const LabeledCloud tmpl = [&] {
    try {
      return io::read_cloud_csv(cfg.template_path);
    } catch (const Error& e) {
      throw ConfigError(std::string("inputs.template: ") + e.what());
    }
  }();
  require(!tmpl.empty(), "inputs.template: template has no points");
  const std::vector<fs::path> meshes = list_corpus(cfg.corpus_dir);
  const fs::path out_dir = cfg.output_dir / "deform";
  fs::create_directories(out_dir);
  const Aabb grid_box = bounds(tmpl).expanded(0.1);
  const std::uint64_t seed = *cfg.seed;
  auto key_of = [&](std::size_t m) { return "deform/" + meshes[m].stem().string(); };

  auto items = run_items(
      meshes.size(), opt.jobs,
      [&](std::size_t m) {
        ItemRecord r;
        r.key = key_of(m);
        r.seed = derive_seed(seed, r.key);
        const std::string stem = meshes[m].stem().string();
        const LabeledCloud target = io::read_cloud_csv(meshes[m]);
        OTParams p = OTParams::defaults_for(joint_bounds(tmpl, target));
        if (cfg.ot.tau_sq) p.tau_sq = *cfg.ot.tau_sq;
        if (cfg.ot.sigma_sq) p.sigma_sq = *cfg.ot.sigma_sq;
        p.max_iter = cfg.ot.max_iter;
        p.tol = cfg.ot.tol;
        p.anneal = cfg.ot.anneal;

        const AssignmentMatrix plan = solve_assignment(tmpl, target, p);
        const DeformationSamples samples = displacement(plan, tmpl, target);
        const double h = cfg.rbf.bandwidth_mm.value_or(default_bandwidth(samples.anchors));
        const RBFField field = fit_rbf_field(samples, h, cfg.rbf.ridge);
        const VectorGrid grid = rasterize_field(field, cfg.grid, grid_box);

        const fs::path f_samples = out_dir / (stem + ".samples.csv");
        const fs::path f_field = out_dir / (stem + ".field.json");
        const fs::path f_diag = out_dir / (stem + ".diagnostics.json");
        const fs::path f_grid = out_dir / (stem + ".grid.s2mf");
        io::write_samples_csv(f_samples, samples);
        io::write_rbf_json(f_field, field);
        io::write_diagnostics_json(f_diag, plan);
        io::write_grid(f_grid, grid);
        for (const fs::path& f : {f_samples, f_field, f_diag, f_grid}) r.outputs.push_back(record_output(cfg.output_dir, f));

        double mean_norm = 0.0;
        for (const Vec3& v : samples.vectors) mean_norm += norm(v);
        mean_norm /= static_cast<double>(samples.vectors.size());
        r.details = {{"mesh", path_str(meshes[m])},
                     {"tau_sq", p.tau_sq},
                     {"sigma_sq", p.sigma_sq},
                     {"bandwidth_mm", h},
                     {"iterations_used", plan.iterations_used},
                     {"converged", plan.converged},
                     {"final_update", plan.final_update},
                     {"objective", plan.objective},
                     {"mean_displacement_mm", mean_norm}};
        if (!plan.converged) log(Level::Warn, r.key + ": OT solve did not converge");
        return std::vector<ItemRecord>{r};
      },
      key_of);
  return finish("deform", cfg, std::move(items));
}

RunManifest cmd_eval(const PipelineConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  require(!cfg.eval_pairs.empty(), "eval.pairs: at least one pair is required");
  const auto& pairs = cfg.eval_pairs;

  struct Row {
    std::size_t n_pred = 0, n_target = 0;
    std::optional<double> mse;
    std::optional<double> iou;
  };
  std::vector<Row> rows(pairs.size());
  auto key_of = [&](std::size_t k) { return "eval/" + pairs[k].id; };

  auto items = run_items(
      pairs.size(), opt.jobs,
      [&](std::size_t k) {
        ItemRecord r;
        r.key = key_of(k);
        r.seed = derive_seed(*cfg.seed, r.key);
        const LabeledCloud pred = io::read_cloud_csv(pairs[k].pred);
        const LabeledCloud target = io::read_cloud_csv(pairs[k].target);
        Row& row = rows[k];
        row.n_pred = pred.size();
        row.n_target = target.size();
        if (pred.size() == target.size() && !pred.empty()) {
          row.mse = mse(pred.points(), target.points());
        } else {
          r.details["mse_skipped"] = "point counts differ";
        }
        row.iou = compare_voxels(pred, target, cfg.eval_resolution).iou;
        r.details["n_pred"] = row.n_pred;
        r.details["n_target"] = row.n_target;
        r.details["mse"] = opt_json(row.mse);
        r.details["iou"] = *row.iou;
        return std::vector<ItemRecord>{r};
      },
      key_of);

  auto stats = [&](auto member) {
    std::vector<double> v;
    for (const Row& row : rows) {
      if (row.*member) v.push_back(*(row.*member));
    }
    if (v.empty()) return std::pair<std::string, std::string>{"", ""};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair{fmt(mean), fmt(std::sqrt(var / static_cast<double>(v.size())))};
  };
  auto cell = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };

  std::string csv = "pair_id,n_pred,n_target,mse,iou\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Row& row = rows[k];
    if (!row.iou) {
      csv += pairs[k].id + ",,,,\n";
      continue;
    }
    csv += pairs[k].id + "," + std::to_string(row.n_pred) + "," + std::to_string(row.n_target) + "," + cell(row.mse) +
           "," + cell(row.iou) + "\n";
  }
  const auto [mse_mean, mse_std] = stats(&Row::mse);
  const auto [iou_mean, iou_std] = stats(&Row::iou);
  csv += "mean,,," + mse_mean + "," + iou_mean + "\n";
  csv += "std,,," + mse_std + "," + iou_std + "\n";
  const fs::path file = cfg.output_dir / "eval" / "metrics.csv";
  io::write_text(file, csv);
  return finish("eval", cfg, std::move(items), {record_output(cfg.output_dir, file)});
}

RunManifest cmd_clinical(const PipelineConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  require(!cfg.patients_csv.empty(), "inputs.patients_csv: required by clinical (GLPS reference)");
  require(cfg.clinical.patients.empty() || !cfg.clinical.lv_labels.empty(),
          "clinical.lv_labels: required when patient clouds are given");

  std::vector<PatientRecord> table;
  std::vector<io::VolumeRow> volumes;
  try {
    table = io::read_patients_csv(cfg.patients_csv);
    if (!cfg.clinical.volumes_csv.empty()) volumes = io::read_volumes_csv(cfg.clinical.volumes_csv);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }

  // EF source per patient, by priority: clouds, then volumes, then the precomputed table value.
  std::map<std::string, const PatientClouds*> clouds;
  std::map<std::string, io::VolumeRow> vols;
  std::map<std::string, PatientRecord> records;
  std::set<std::string> ids;
  for (const PatientClouds& p : cfg.clinical.patients) {
    clouds[p.patient_id] = &p;
    ids.insert(p.patient_id);
  }
  for (const io::VolumeRow& v : volumes) {
    vols[v.patient_id] = v;
    ids.insert(v.patient_id);
  }
  for (const PatientRecord& p : table) {
    records[p.patient_id] = p;
    ids.insert(p.patient_id);
  }
  const std::vector<std::string> order(ids.begin(), ids.end());

  std::vector<std::optional<io::ReportRow>> report(order.size());
  auto key_of = [&](std::size_t k) { return "clinical/" + order[k]; };
  const std::uint64_t seed = *cfg.seed;

  auto items = run_items(
      order.size(), opt.jobs,
      [&](std::size_t k) {
        const std::string& id = order[k];
        ItemRecord r;
        r.key = key_of(k);
        r.seed = derive_seed(seed, r.key);
        io::ReportRow row;
        row.patient_id = id;
        if (auto c = clouds.find(id); c != clouds.end()) {
          const LabeledCloud ed_cloud = io::read_cloud_csv(c->second->ed);
          const LabeledCloud es_cloud = io::read_cloud_csv(c->second->es);
          const std::uint64_t s_ed = derive_seed(seed, r.key + "/ed");
          const std::uint64_t s_es = derive_seed(seed, r.key + "/es");
          const VolumeReport ed_v = region_volume(ed_cloud, cfg.clinical.lv_labels, cfg.clinical.subsample_rate, s_ed);
          const VolumeReport es_v = region_volume(es_cloud, cfg.clinical.lv_labels, cfg.clinical.subsample_rate, s_es);
          row.edv_mm3 = ed_v.volume_mm3;
          row.esv_mm3 = es_v.volume_mm3;
          r.details = {{"source", "clouds"},
                       {"ed_points_used", ed_v.point_count_used},
                       {"es_points_used", es_v.point_count_used},
                       {"ed_seed", s_ed},
                       {"es_seed", s_es}};
        } else if (auto v = vols.find(id); v != vols.end()) {
          row.edv_mm3 = v->second.edv_mm3;
          row.esv_mm3 = v->second.esv_mm3;
          r.details = {{"source", "volumes"}};
        } else if (auto t = records.find(id); t != records.end() && t->second.ef) {
          row.ef_percent = *t->second.ef * 100.0;
          r.details = {{"source", "precomputed_ef"}};
        } else {
          r.ok = false;
          r.error = "no EF source (clouds, volumes or ef column)";
          return std::vector<ItemRecord>{r};
        }
        if (row.edv_mm3) {
          row.sv_mm3 = stroke_volume(*row.edv_mm3, *row.esv_mm3);
          row.ef_percent = ef(*row.edv_mm3, *row.esv_mm3);
        }
        r.details["ef_percent"] = row.ef_percent;
        report[k] = row;
        return std::vector<ItemRecord>{r};
      },
      key_of);

  std::vector<io::ReportRow> rows;
  std::vector<double> efs, glps;
  json excluded = json::array();
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!report[k]) {
      excluded.push_back({{"patient_id", order[k]}, {"reason", "no EF"}});
      continue;
    }
    rows.push_back(*report[k]);
    const auto rec = records.find(order[k]);
    if (rec == records.end() || !rec->second.glps) {
      excluded.push_back({{"patient_id", order[k]}, {"reason", "missing GLPS"}});
      continue;
    }
    efs.push_back(report[k]->ef_percent);
    glps.push_back(*rec->second.glps);
  }
  json summary = {{"n", efs.size()}, {"excluded", excluded}};
  try {
    summary["pcc"] = pearson(efs, glps);
  } catch (const UndefinedCorrelation& e) {
    summary["pcc"] = nullptr;
    summary["pcc_undefined"] = e.what();
  }
  const fs::path report_file = cfg.output_dir / "clinical" / "report.csv";
  const fs::path summary_file = cfg.output_dir / "clinical" / "summary.json";
  io::write_report_csv(report_file, rows);
  io::write_text(summary_file, summary.dump(2) + "\n");
  return finish("clinical", cfg, std::move(items),
                {record_output(cfg.output_dir, report_file), record_output(cfg.output_dir, summary_file)});
}

RunManifest cmd_synth(const fs::path& dir, std::size_t count, std::size_t points, std::uint64_t seed) {
  if (count < 1 || points < 5) throw ConfigError("synth: need count >= 1 and points >= 5");
  std::vector<ItemRecord> items;
  auto emit = [&](const std::string& key, const fs::path& file, const LabeledCloud& cloud, json details) {
    io::write_cloud_csv(file, cloud);
    ItemRecord r;
    r.key = key;
    r.seed = derive_seed(seed, key);
    r.details = std::move(details);
    r.outputs.push_back(record_output(dir, file));
    items.push_back(std::move(r));
  };
  auto shape_json = [](const HeartShape& s) {
    return json{{"lv_length_mm", s.lv_length_mm},
                {"lv_radius_mm", s.lv_radius_mm},
                {"wall_mm", s.wall_mm},
                {"long_contraction", s.long_contraction},
                {"radial_contraction", s.radial_contraction},
                {"lv_volume_mm3", s.lv_volume_mm3()}};
  };

  const HeartShape base;
  emit("synth/template", dir / "template.csv", synthetic_heart(base, points, derive_seed(seed, "synth/template")),
       shape_json(base));

  std::string patients = "patient_id,glps,ef\n";
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "heart_%03zu", i);
    const std::string key = std::string("synth/") + id;
    const std::uint64_t s = derive_seed(seed, key);
    const HeartShape ed = perturbed_shape(base, 0.1, s);
    emit(key, dir / "corpus" / (std::string(id) + ".csv"), synthetic_heart(ed, points, s), shape_json(ed));

    // End-systole: contraction sampled per patient; GLPS follows EF linearly plus noise.
    std::mt19937_64 gen(derive_seed(s, "es"));
    std::uniform_real_distribution<double> contract(0.7, 0.95);
    HeartShape es = ed;
    es.long_contraction = contract(gen);
    es.radial_contraction = contract(gen);
    const double ef_frac = 1.0 - es.lv_volume_mm3() / ed.lv_volume_mm3();
    std::normal_distribution<double> noise(0.0, 1.0);
    const double g = -5.0 - 30.0 * ef_frac + noise(gen);
    emit(key + "/ed", dir / "patients" / (std::string(id) + "_ed.csv"),
         synthetic_heart(ed, points, derive_seed(s, "ed")), shape_json(ed));
    emit(key + "/es", dir / "patients" / (std::string(id) + "_es.csv"),
         synthetic_heart(es, points, derive_seed(s, "es-cloud")), shape_json(es));
    char line[96];
    std::snprintf(line, sizeof line, "%s,%.2f,\n", id, g);
    patients += line;
  }
  const fs::path table = dir / "patients.csv";
  io::write_text(table, patients);

  std::sort(items.begin(), items.end(), [](const ItemRecord& a, const ItemRecord& b) { return a.key < b.key; });
  RunManifest m{"synth",
                {{"dir", path_str(fs::absolute(dir))}, {"count", count}, {"points", points}, {"seed", seed}},
                std::move(items),
                {record_output(dir, table)}};
  io::write_text(dir / "manifest_synth.json", m.to_json().dump(2) + "\n");
  return m;
}

}  // namespace s2m::pipeline
