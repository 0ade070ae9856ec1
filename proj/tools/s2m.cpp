#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "s2m/pipeline.hpp"

namespace pl = s2m::pipeline;

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "Pipeline config (JSON) or a previous run manifest")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "Global seed; overrides the config");
  cmd->add_option("--jobs", a.jobs, "Worker threads for item-level parallelism")->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "Output directory; overrides the config");
}

int run(const CommonArgs& a, pl::RunManifest (*command)(const pl::PipelineConfig&, const pl::RunOptions&)) {
  pl::PipelineConfig cfg = pl::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.output_dir = std::filesystem::absolute(a.out).lexically_normal();
  const pl::RunManifest m = command(cfg, pl::RunOptions{a.jobs});
  std::cout << m.command << ": " << m.items.size() << " items, " << m.failures() << " failed; manifest "
            << (cfg.output_dir / ("manifest_" + m.command + ".json")).string() << '\n';
  return m.failures() == 0 ? pl::kClean : pl::kItemFailures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo-view synthesis, OT deformation labeling and cardiac metrics"};
  app.set_version_flag("--version", pl::version());
  app.require_subcommand(1);

  CommonArgs slice, pseudo, deform, eval, clinical;
  auto* c_slice = app.add_subcommand("slice", "Jitter, slice and rasterize every corpus mesh in each view");
  auto* c_pseudo = app.add_subcommand("pseudo", "Blur, crop and speckle each mask into a pseudo image");
  auto* c_deform = app.add_subcommand("deform", "OT deformation fields from the template to every corpus mesh");
  auto* c_eval = app.add_subcommand("eval", "MSE and voxel IoU over prediction/target pairs");
  auto* c_clinical = app.add_subcommand("clinical", "LV volumes, EF and the EF/GLPS correlation");
  add_common(c_slice, slice);
  add_common(c_pseudo, pseudo);
  add_common(c_deform, deform);
  add_common(c_eval, eval);
  add_common(c_clinical, clinical);

  std::string synth_dir;
  std::size_t synth_count = 3, synth_points = 2000;
  std::uint64_t synth_seed = 1;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic labeled-heart corpus");
  c_synth->add_option("--out", synth_dir, "Target directory")->required();
  c_synth->add_option("--count", synth_count, "Number of corpus hearts / patients");
  c_synth->add_option("--points", synth_points, "Points per cloud");
  c_synth->add_option("--seed", synth_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pl::kBadConfig;
  }

  try {
    if (*c_slice) return run(slice, pl::cmd_slice);
    if (*c_pseudo) return run(pseudo, pl::cmd_pseudo);
    if (*c_deform) return run(deform, pl::cmd_deform);
    if (*c_eval) return run(eval, pl::cmd_eval);
    if (*c_clinical) return run(clinical, pl::cmd_clinical);
    if (*c_synth) {
      const auto m = pl::cmd_synth(synth_dir, synth_count, synth_points, synth_seed);
      std::cout << "synth: " << m.items.size() << " clouds written to " << synth_dir << '\n';
      return pl::kClean;
    }
  } catch (const pl::ConfigError& e) {
    std::cerr << "s2m: bad config: " << e.what() << '\n';
    return pl::kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "s2m: " << e.what() << '\n';
    return 1;
  }
  return pl::kBadConfig;
}
