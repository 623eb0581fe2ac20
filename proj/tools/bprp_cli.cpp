// bprp: simulate, train, localize, eval and pipeline commands.
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "bprp/errors.hpp"
#include "bprp/experiment.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitConsistency = 3;

struct Flags {
  std::string config;
  std::string layout;
  std::uint64_t seed = 0;
  std::string preset;
  std::string methods;
  std::string out;
  double delta = 0;
  double smax = 0;
  double sharpness = 0;
  std::size_t burn_in = 0;
  std::size_t draws = 0;
  std::size_t chains = 0;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Flags& f, std::vector<CLI::Option*>& opts) {
  opts.push_back(cmd->add_option("--config", f.config, "JSON config file"));
  opts.push_back(cmd->add_option("--layout", f.layout, "layout_v1 JSON file"));
  opts.push_back(cmd->add_option("--seed", f.seed, "master seed"));
  opts.push_back(cmd->add_option("--preset", f.preset, "library | retail"));
  opts.push_back(cmd->add_option("--methods", f.methods, "comma list of bprp,rssi,fused,two_step,triangle,track"));
  opts.push_back(cmd->add_option("--out", f.out, "output directory"));
  opts.push_back(cmd->add_option("--delta", f.delta, "window length in seconds"));
  opts.push_back(cmd->add_option("--smax", f.smax, "maximum walking speed (m/s)"));
  opts.push_back(cmd->add_option("--sharpness", f.sharpness, "triangle potential sharpness (1/m)"));
  opts.push_back(cmd->add_option("--burn-in", f.burn_in, "MCMC burn-in per chain"));
  opts.push_back(cmd->add_option("--draws", f.draws, "MCMC draws per chain"));
  opts.push_back(cmd->add_option("--chains", f.chains, "MCMC chains"));
  cmd->add_flag("-v,--verbose", f.verbose, "debug logging");
}

// Defaults, then the config file, then explicitly given flags.
bprp::ExperimentConfig resolve(const Flags& f, CLI::App* cmd) {
  bprp::ExperimentConfig c;
  if (!f.config.empty()) bprp::apply_config_file(c, f.config);
  const auto given = [cmd](const char* name) { return cmd->count(name) > 0; };
  if (given("--layout")) c.layout_path = f.layout;
  if (given("--seed")) c.seed = f.seed;
  if (given("--preset")) c.preset = f.preset;
  if (given("--methods")) c.methods = bprp::parse_method_list(f.methods);
  if (given("--out")) c.output_dir = f.out;
  if (given("--delta")) c.delta = f.delta;
  if (given("--smax")) c.smax = f.smax;
  if (given("--sharpness")) c.sharpness = f.sharpness;
  if (given("--burn-in")) c.mcmc.burn_in = f.burn_in;
  if (given("--draws")) c.mcmc.draws = f.draws;
  if (given("--chains")) c.mcmc.chains = f.chains;
  if (!c.layout_path.empty() && !std::filesystem::exists(c.layout_path)) {
    throw bprp::InvalidInput("layout file not found: " + c.layout_path);
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian packet-reception-probability localization"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<CLI::Option*> opts;

  auto* simulate = app.add_subcommand("simulate", "generate packet logs, trajectories and truth");
  add_common(simulate, flags, opts);

  std::string packets, truth, model, predictions, contacts;
  auto* train = app.add_subcommand("train", "fit link parameters (and unknown positions)");
  add_common(train, flags, opts);
  train->add_option("--packets", packets, "training packet CSV")->required();
  train->add_option("--truth", truth, "truth/labels JSON with a 'training' array")->required();

  auto* localize = app.add_subcommand("localize", "localize every window of a packet log");
  add_common(localize, flags, opts);
  localize->add_option("--model", model, "model_v1 JSON")->required();
  localize->add_option("--packets", packets, "packet CSV")->required();

  auto* eval = app.add_subcommand("eval", "score predictions against truth");
  add_common(eval, flags, opts);
  eval->add_option("--truth", truth, "truth JSON")->required();
  eval->add_option("--predictions", predictions, "predictions CSV")->required();
  eval->add_option("--contacts", contacts, "contact estimates CSV");

  auto* pipeline = app.add_subcommand("pipeline", "simulate, train, localize, trace and evaluate");
  add_common(pipeline, flags, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }
  spdlog::set_level(flags.verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");

  try {
    if (simulate->parsed()) return bprp::cmd_simulate(resolve(flags, simulate));
    if (pipeline->parsed()) return bprp::cmd_pipeline(resolve(flags, pipeline));
    if (train->parsed()) {
      const auto c = resolve(flags, train);
      if (c.layout_path.empty()) throw bprp::InvalidInput("train requires --layout");
      return bprp::cmd_train(c, c.layout_path, packets, truth);
    }
    if (localize->parsed()) {
      const auto c = resolve(flags, localize);
      if (c.layout_path.empty()) throw bprp::InvalidInput("localize requires --layout");
      return bprp::cmd_localize(c, c.layout_path, model, packets);
    }
    if (eval->parsed()) {
      const auto c = resolve(flags, eval);
      std::optional<std::filesystem::path> cpath;
      if (!contacts.empty()) cpath = contacts;
      return bprp::cmd_eval(truth, predictions, cpath, c.output_dir);
    }
  } catch (const bprp::DataConsistency& e) {
    spdlog::error("{}", e.what());
    return kExitConsistency;
  } catch (const bprp::Error& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("malformed JSON: {}", e.what());
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  }
  return kExitInput;
}
