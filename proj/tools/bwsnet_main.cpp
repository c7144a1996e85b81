// Command-line entry point: bwsnet <synth|featurize|train|eval|ablate|export>
// Global flags: --config PATH, --seed INT, --out DIR.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bwsnet/bwsnet.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::int64_t seed = -1;
  bool seed_set = false;
  std::string out_dir;
};

// Resolves the effective config: file (if given), then --seed / --out
// overrides.  Without --out or a config-file path, outputs land under a
// config-named directory so reruns overwrite deterministically.
bwsnet::ExperimentConfig resolve_config(const GlobalArgs& g, const std::string& subcommand) {
  bwsnet::ExperimentConfig cfg;
  if (!g.config_path.empty()) cfg = bwsnet::load_experiment_config(g.config_path);
  if (g.seed_set) {
    auto s = static_cast<std::uint64_t>(g.seed);
    cfg.oracle.seed = s;
    cfg.encoder.seed = s;
    cfg.train.seed = s;
    cfg.split.seed = s;
  }
  if (!g.out_dir.empty()) {
    cfg.paths.out = g.out_dir;
  } else if (cfg.paths.out.empty()) {
    if (!g.config_path.empty()) {
      std::string stem = std::filesystem::path(g.config_path).stem().string();
      cfg.paths.out = "out/" + stem;
    } else {
      cfg.paths.out = "out/" + subcommand;
    }
  }
  return cfg;
}

bwsnet::AblationRow parse_row_spec(const std::string& spec) {
  // name,margin_mode,lambda_dmc,lambda_fr e.g. "custom,learned,0.5,1"
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) parts.push_back(part);
  if (parts.size() != 4)
    throw bwsnet::error("--row expects 'name,margin_mode,lambda_dmc,lambda_fr', got '" + spec +
                        "'");
  bwsnet::AblationRow row;
  row.name = parts[0];
  row.margin_mode = bwsnet::detail::parse_margin_mode(parts[1]);
  row.lambda_dmc = std::stod(parts[2]);
  row.lambda_fr = std::stod(parts[3]);
  return row;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BWSNet: metric embeddings learned from best-worst scaling judgements"};
  app.require_subcommand(1);
  app.fallthrough(true);  // lets global flags appear after the subcommand name

  GlobalArgs global;
  app.add_option("--config", global.config_path, "Experiment config file (JSON)");
  auto* seed_opt = app.add_option("--seed", global.seed, "Override every seed in the config");
  app.add_option("--out", global.out_dir, "Output directory (overrides config)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from the latent oracle");
  auto* featurize =
      app.add_subcommand("featurize", "Convert a directory of WAV files to feature files");
  std::string wav_dir, feat_out;
  featurize->add_option("--wav-dir", wav_dir, "Directory of WAV files")->required();
  featurize->add_option("--feat-out", feat_out,
                        "Feature output directory (defaults to the resolved output directory)");

  auto* train = app.add_subcommand("train", "Train an embedding model");
  double lambda_dmc_flag = 0.0, lambda_fr_flag = 0.0;
  auto* ld_opt = train->add_option("--lambda-dmc", lambda_dmc_flag,
                                   "Override the margin-consistency loss weight");
  auto* lf_opt =
      train->add_option("--lambda-fr", lambda_fr_flag, "Override the fulfillment loss weight");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the eval split");
  std::string eval_checkpoint;
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();

  auto* ablate = app.add_subcommand("ablate", "Run the ablation grid");
  std::vector<std::string> row_specs;
  ablate->add_option("--row", row_specs,
                     "Custom cell 'name,margin_mode,lambda_dmc,lambda_fr' (repeatable; replaces "
                     "the standard grid)");
  int n_seeds_flag = 0;
  auto* ns_opt = ablate->add_option("--n-seeds", n_seeds_flag, "Override the seed count");

  auto* exp = app.add_subcommand("export", "Export embeddings, scores, and a 2-D projection");
  std::string export_checkpoint;
  exp->add_option("--checkpoint", export_checkpoint, "Checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);
  global.seed_set = seed_opt->count() > 0;

  try {
    if (synth->parsed()) {
      return bwsnet::cmd_synth(resolve_config(global, "synth"), std::cout, std::cerr);
    }
    if (featurize->parsed()) {
      bwsnet::ExperimentConfig cfg = resolve_config(global, "featurize");
      std::string out_dir = feat_out.empty() ? cfg.paths.out : feat_out;
      return bwsnet::cmd_featurize(wav_dir, out_dir, std::cout, std::cerr);
    }
    if (train->parsed()) {
      bwsnet::ExperimentConfig cfg = resolve_config(global, "train");
      if (ld_opt->count() > 0) cfg.train.lambda_dmc = lambda_dmc_flag;
      if (lf_opt->count() > 0) cfg.train.lambda_fr = lambda_fr_flag;
      return bwsnet::cmd_train(cfg, std::cout, std::cerr);
    }
    if (eval->parsed()) {
      return bwsnet::cmd_eval(resolve_config(global, "eval"), eval_checkpoint, std::cout,
                              std::cerr);
    }
    if (ablate->parsed()) {
      bwsnet::ExperimentConfig cfg = resolve_config(global, "ablate");
      if (ns_opt->count() > 0) cfg.n_seeds = n_seeds_flag;
      std::vector<bwsnet::AblationRow> rows;
      for (const std::string& spec : row_specs) rows.push_back(parse_row_spec(spec));
      return bwsnet::cmd_ablate(cfg, rows, std::cout, std::cerr);
    }
    if (exp->parsed()) {
      return bwsnet::cmd_export(resolve_config(global, "export"), export_checkpoint, std::cout,
                                std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
