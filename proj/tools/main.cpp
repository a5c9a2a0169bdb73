#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "mtsim/config.hpp"
#include "mtsim/qnet.hpp"
#include "mtsim/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFault = 3;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool state_with_td = false;
  std::optional<int> workers;
};

mtsim::ScenarioConfig load_config(const CommonOpts& opts) {
  mtsim::ScenarioConfig cfg = opts.config_path.empty()
                                  ? mtsim::ScenarioConfig::parse("")
                                  : mtsim::ScenarioConfig::parse_file(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out_dir) cfg.out_dir = *opts.out_dir;
  if (opts.state_with_td) cfg.state_with_td = true;
  if (opts.workers) cfg.workers = *opts.workers;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config_path, "Scenario config (TOML)");
  if (config_required) c->required();
  cmd->add_option("--seed", opts.seed, "Run seed (overrides the config)");
  cmd->add_option("--out", opts.out_dir, "Output directory (overrides the config)");
  cmd->add_flag("--state-with-td", opts.state_with_td,
                "Append the destination-direction one-hot to the learner state");
  cmd->add_option("--workers", opts.workers, "Decide-phase worker threads");
}

int cmd_generate_map(const std::string& params_path, const std::string& out_path) {
  mtsim::ScenarioConfig cfg = params_path.empty()
                                  ? mtsim::ScenarioConfig::parse("")
                                  : mtsim::ScenarioConfig::parse_file(params_path);
  mtsim::CityMap map = mtsim::CityMap::generate(cfg.map);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw mtsim::RuntimeFault("cannot write map file '" + out_path + "'");
  out << map.to_json().dump(2) << '\n';
  const mtsim::MapCounts& c = map.counts();
  std::printf("map %dx%d: %d streets, %d segments, %d junctions, %d signals\n",
              map.width(), map.height(), c.streets, c.segments, c.junctions, c.signals);
  std::printf("street patches %d (lanes %d, medians %d, junction %d), capacity %d\n",
              c.street_patches, c.lane_patches, c.median_patches, c.junction_patches,
              c.capacity);
  return kExitOk;
}

int cmd_run(const CommonOpts& opts) {
  mtsim::ScenarioConfig cfg = load_config(opts);
  mtsim::RunArtifacts art = mtsim::run_scenario(cfg);
  const mtsim::RunSummary& s = art.summary;
  std::printf("run complete: %lld steps, %d vehicles (%.2f%% of capacity %d)\n",
              s.steps, s.vehicles, s.occupancy_percent, s.capacity);
  std::printf("trips %lld, nav predictions %lld (refused %lld), jam reports %lld\n",
              s.completed_trips, s.predictions_total, s.predictions_refused,
              s.jam_reports);
  std::printf("metrics: %s\njams:    %s\nmanifest:%s\n", art.metrics_csv.c_str(),
              art.jam_csv.c_str(), art.manifest.c_str());
  return kExitOk;
}

int cmd_pretrain(const CommonOpts& opts) {
  mtsim::ScenarioConfig cfg = load_config(opts);
  mtsim::PretrainArtifacts art = mtsim::pretrain(cfg);
  std::printf("pretraining finished; %zu model files selected\n",
              art.model_files.size());
  for (const auto& f : art.model_files) std::printf("  %s\n", f.c_str());
  std::printf("ranking manifest: %s\n", art.manifest.c_str());
  return kExitOk;
}

int cmd_inspect_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mtsim::ConfigError("cannot open model file '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  mtsim::QNetwork net = mtsim::deserialize_model(bytes);

  std::printf("model version %d, step counter %lld\n", mtsim::kModelFormatVersion,
              net.step_counter);
  std::printf("layer sizes:");
  for (int s : net.layer_sizes()) std::printf(" %d", s);
  std::printf("\n");
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& w = net.layers()[l].w;
    double mn = w[0], mx = w[0], sum = 0.0, sq = 0.0;
    for (double x : w) {
      mn = std::min(mn, x);
      mx = std::max(mx, x);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / w.size();
    const double var = sq / w.size() - mean * mean;
    std::printf("layer %zu: %zu weights, min %.4f, max %.4f, mean %.4f, std %.4f\n",
                l, w.size(), mn, mx, mean, std::sqrt(std::max(0.0, var)));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtsim - deterministic grid-city traffic simulation with "
               "per-vehicle learning navigators"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate-map", "Generate a city map and export it as JSON");
  std::string params_path, map_out;
  gen->add_option("--params", params_path, "TOML file with a [map] section");
  gen->add_option("--out", map_out, "Output JSON file")->required();

  CommonOpts run_opts;
  auto* run = app.add_subcommand("run", "Execute a scenario and write metrics");
  add_common(run, run_opts, false);

  CommonOpts pre_opts;
  auto* pre = app.add_subcommand("pretrain", "Train a small population and select the best models");
  add_common(pre, pre_opts, false);

  auto* inspect = app.add_subcommand("inspect-model", "Print shape and weight statistics");
  std::string model_path;
  inspect->add_option("file", model_path, "Model JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_generate_map(params_path, map_out);
    if (run->parsed()) return cmd_run(run_opts);
    if (pre->parsed()) return cmd_pretrain(pre_opts);
    if (inspect->parsed()) return cmd_inspect_model(model_path);
  } catch (const mtsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFault;
  }
  return kExitOk;
}
