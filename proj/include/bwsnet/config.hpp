#pragma once
// Experiment configuration: one structured-text (JSON) file describing
// paths, the synthetic oracle, encoder/margin architecture, training
// hyperparameters, the dataset split, and the ablation seed count.
// Unknown keys are rejected with the offending key named.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwsnet/core.hpp"
#include "bwsnet/losses.hpp"
#include "bwsnet/model.hpp"
#include "bwsnet/synth.hpp"
#include "bwsnet/trainer.hpp"

namespace bwsnet {

struct PathsConfig {
  std::string items;    // feature file or directory of .feat files
  std::string trials;   // trials JSONL
  std::string latents;  // optional ground-truth latents (analysis only)
  std::string out;      // output directory
};

struct SplitConfig {
  double held_out_fraction = 0.1;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  PathsConfig paths;
  OracleConfig oracle;
  EncoderConfig encoder;
  MarginConfig margin;
  TrainConfig train;
  SplitConfig split;
  int n_seeds = 5;
};

namespace detail {

using json = nlohmann::ordered_json;

inline void reject_unknown_keys(const json& obj, const std::string& section,
                                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw error("config: unknown key '" + it.key() + "' in section '" + section + "'");
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).template get<T>();
}

inline void read_dims(const json& obj, const char* key, std::vector<int>& out) {
  if (!obj.contains(key)) return;
  const json& arr = obj.at(key);
  if (!arr.is_array()) throw error(std::string("config: '") + key + "' must be an array");
  out.clear();
  for (const auto& v : arr) out.push_back(v.get<int>());
}

inline FrMode parse_fr_mode(const std::string& s) {
  if (s == "smooth") return FrMode::smooth;
  if (s == "hard") return FrMode::hard;
  throw error("config: fr_mode must be 'smooth' or 'hard', got '" + s + "'");
}

inline MarginMode parse_margin_mode(const std::string& s) {
  if (s == "learned") return MarginMode::learned;
  if (s == "fixed") return MarginMode::fixed;
  throw error("config: margin_mode must be 'learned' or 'fixed', got '" + s + "'");
}

inline GammaKind parse_gamma(const std::string& s) {
  if (s == "relu_neg") return GammaKind::relu_neg;
  if (s == "zero") return GammaKind::zero;
  throw error("config: gamma must be 'relu_neg' or 'zero', got '" + s + "'");
}

inline const char* fr_mode_name(FrMode m) { return m == FrMode::smooth ? "smooth" : "hard"; }
inline const char* margin_mode_name(MarginMode m) {
  return m == MarginMode::learned ? "learned" : "fixed";
}
inline const char* gamma_name(GammaKind g) { return g == GammaKind::relu_neg ? "relu_neg" : "zero"; }

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  detail::json root;
  try {
    root = detail::json::parse(text);
  } catch (const std::exception& e) {
    throw error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw error("config: top level must be an object");
  detail::reject_unknown_keys(
      root, "(top level)",
      {"paths", "oracle", "encoder", "margin", "train", "split", "n_seeds"});

  ExperimentConfig cfg;

  if (root.contains("paths")) {
    const auto& p = root.at("paths");
    detail::reject_unknown_keys(p, "paths", {"items", "trials", "latents", "out"});
    detail::read_field(p, "items", cfg.paths.items);
    detail::read_field(p, "trials", cfg.paths.trials);
    detail::read_field(p, "latents", cfg.paths.latents);
    detail::read_field(p, "out", cfg.paths.out);
  }

  if (root.contains("oracle")) {
    const auto& o = root.at("oracle");
    detail::reject_unknown_keys(o, "oracle",
                                {"n_items", "feature_dim", "frames", "noise_sigma",
                                 "trials_per_item", "trial_size", "feature_noise", "seed",
                                 "attribute"});
    detail::read_field(o, "n_items", cfg.oracle.n_items);
    detail::read_field(o, "feature_dim", cfg.oracle.feature_dim);
    detail::read_field(o, "frames", cfg.oracle.frames);
    detail::read_field(o, "noise_sigma", cfg.oracle.noise_sigma);
    detail::read_field(o, "trials_per_item", cfg.oracle.trials_per_item);
    detail::read_field(o, "trial_size", cfg.oracle.trial_size);
    detail::read_field(o, "feature_noise", cfg.oracle.feature_noise);
    detail::read_field(o, "seed", cfg.oracle.seed);
    detail::read_field(o, "attribute", cfg.oracle.attribute);
  }

  if (root.contains("encoder")) {
    const auto& e = root.at("encoder");
    detail::reject_unknown_keys(e, "encoder", {"feature_dim", "hidden_dims", "d", "seed"});
    detail::read_field(e, "feature_dim", cfg.encoder.feature_dim);
    detail::read_dims(e, "hidden_dims", cfg.encoder.hidden_dims);
    detail::read_field(e, "d", cfg.encoder.d);
    detail::read_field(e, "seed", cfg.encoder.seed);
  }

  if (root.contains("margin")) {
    const auto& m = root.at("margin");
    detail::reject_unknown_keys(m, "margin", {"mu", "delta", "hidden_dims"});
    detail::read_field(m, "mu", cfg.margin.mu);
    detail::read_field(m, "delta", cfg.margin.delta);
    detail::read_dims(m, "hidden_dims", cfg.margin.hidden_dims);
  }

  // The margin section owns mu/delta; the train section may override them.
  cfg.train.mu = cfg.margin.mu;
  cfg.train.delta = cfg.margin.delta;

  if (root.contains("train")) {
    const auto& t = root.at("train");
    detail::reject_unknown_keys(
        t, "train",
        {"batch_size", "learning_rate", "lambda_dmc", "lambda_fr", "mu", "delta", "max_steps",
         "eval_every", "patience", "seed", "fr_mode", "temperature", "margin_mode", "gamma",
         "balance_by_attribute"});
    detail::read_field(t, "batch_size", cfg.train.batch_size);
    detail::read_field(t, "learning_rate", cfg.train.learning_rate);
    detail::read_field(t, "lambda_dmc", cfg.train.lambda_dmc);
    detail::read_field(t, "lambda_fr", cfg.train.lambda_fr);
    detail::read_field(t, "mu", cfg.train.mu);
    detail::read_field(t, "delta", cfg.train.delta);
    detail::read_field(t, "max_steps", cfg.train.max_steps);
    detail::read_field(t, "eval_every", cfg.train.eval_every);
    detail::read_field(t, "patience", cfg.train.patience);
    detail::read_field(t, "seed", cfg.train.seed);
    if (t.contains("fr_mode"))
      cfg.train.fr_mode = detail::parse_fr_mode(t.at("fr_mode").get<std::string>());
    detail::read_field(t, "temperature", cfg.train.temperature);
    if (t.contains("margin_mode"))
      cfg.train.margin_mode = detail::parse_margin_mode(t.at("margin_mode").get<std::string>());
    if (t.contains("gamma")) cfg.train.gamma = detail::parse_gamma(t.at("gamma").get<std::string>());
    detail::read_field(t, "balance_by_attribute", cfg.train.balance_by_attribute);
  }

  if (root.contains("split")) {
    const auto& s = root.at("split");
    detail::reject_unknown_keys(s, "split", {"held_out_fraction", "train_fraction", "seed"});
    detail::read_field(s, "held_out_fraction", cfg.split.held_out_fraction);
    detail::read_field(s, "train_fraction", cfg.split.train_fraction);
    detail::read_field(s, "seed", cfg.split.seed);
  }

  detail::read_field(root, "n_seeds", cfg.n_seeds);
  if (cfg.n_seeds < 1) throw error("config: n_seeds must be >= 1");

  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

// Deterministic echo of the effective configuration (written next to run
// outputs so a run is reproducible from its artifacts alone).
inline std::string dump_experiment_config(const ExperimentConfig& cfg) {
  detail::json root;
  root["paths"] = {{"items", cfg.paths.items},
                   {"trials", cfg.paths.trials},
                   {"latents", cfg.paths.latents},
                   {"out", cfg.paths.out}};
  root["oracle"] = {{"n_items", cfg.oracle.n_items},
                    {"feature_dim", cfg.oracle.feature_dim},
                    {"frames", cfg.oracle.frames},
                    {"noise_sigma", cfg.oracle.noise_sigma},
                    {"trials_per_item", cfg.oracle.trials_per_item},
                    {"trial_size", cfg.oracle.trial_size},
                    {"feature_noise", cfg.oracle.feature_noise},
                    {"seed", cfg.oracle.seed},
                    {"attribute", cfg.oracle.attribute}};
  root["encoder"] = {{"feature_dim", cfg.encoder.feature_dim},
                     {"hidden_dims", cfg.encoder.hidden_dims},
                     {"d", cfg.encoder.d},
                     {"seed", cfg.encoder.seed}};
  root["margin"] = {{"mu", cfg.margin.mu},
                    {"delta", cfg.margin.delta},
                    {"hidden_dims", cfg.margin.hidden_dims}};
  root["train"] = {{"batch_size", cfg.train.batch_size},
                   {"learning_rate", cfg.train.learning_rate},
                   {"lambda_dmc", cfg.train.lambda_dmc},
                   {"lambda_fr", cfg.train.lambda_fr},
                   {"mu", cfg.train.mu},
                   {"delta", cfg.train.delta},
                   {"max_steps", cfg.train.max_steps},
                   {"eval_every", cfg.train.eval_every},
                   {"patience", cfg.train.patience},
                   {"seed", cfg.train.seed},
                   {"fr_mode", detail::fr_mode_name(cfg.train.fr_mode)},
                   {"temperature", cfg.train.temperature},
                   {"margin_mode", detail::margin_mode_name(cfg.train.margin_mode)},
                   {"gamma", detail::gamma_name(cfg.train.gamma)},
                   {"balance_by_attribute", cfg.train.balance_by_attribute}};
  root["split"] = {{"held_out_fraction", cfg.split.held_out_fraction},
                   {"train_fraction", cfg.split.train_fraction},
                   {"seed", cfg.split.seed}};
  root["n_seeds"] = cfg.n_seeds;
  return root.dump(2) + "\n";
}

}  // namespace bwsnet
