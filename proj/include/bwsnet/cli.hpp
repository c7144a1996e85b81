#pragma once
// Subcommand implementations behind the command-line tool: synth, featurize,
// train, eval, ablate, export.  Each returns a process exit code (0 iff all
// requested work succeeded) and writes human-readable progress to the given
// streams.  All outputs are deterministic for a fixed config + seed: no
// timestamps, fixed iteration orders, 17-significant-digit reals.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bwsnet/ablation.hpp"
#include "bwsnet/analysis.hpp"
#include "bwsnet/audio.hpp"
#include "bwsnet/autodiff.hpp"
#include "bwsnet/config.hpp"
#include "bwsnet/core.hpp"
#include "bwsnet/io.hpp"
#include "bwsnet/model.hpp"
#include "bwsnet/synth.hpp"
#include "bwsnet/trainer.hpp"
#include "bwsnet/trial.hpp"

namespace bwsnet {

namespace detail {

inline void ensure_parent_dir(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

inline void ensure_dir(const std::string& path) {
  if (!path.empty()) std::filesystem::create_directories(path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw error("write failed for '" + path + "'");
}

inline std::string history_csv(const TrainHistory& history) {
  std::ostringstream out;
  out << "step,dmrc,dmc,fr,total,val_fr,val_wat,margin_min,margin_mean,margin_max\n";
  for (const HistoryRow& r : history.rows)
    out << r.step << "," << fmt_g17(r.dmrc) << "," << fmt_g17(r.dmc) << "," << fmt_g17(r.fr) << ","
        << fmt_g17(r.total) << "," << fmt_g17(r.val_fr) << "," << fmt_g17(r.val_wat) << ","
        << fmt_g17(r.margin_min) << "," << fmt_g17(r.margin_mean) << "," << fmt_g17(r.margin_max)
        << "\n";
  return out.str();
}

inline std::string metrics_text(const Metrics& m) {
  std::ostringstream out;
  out << "fr_percent " << fmt_g17(m.fr_percent) << "\n"
      << "wat_percent " << fmt_g17(m.wat_percent) << "\n"
      << "n_relations " << m.n_relations << "\n"
      << "n_trials " << m.n_trials << "\n";
  return out.str();
}

// Loads the dataset named by the config paths, or synthesizes one in memory
// when no paths are configured.
inline void load_or_synth_dataset(const ExperimentConfig& cfg, std::vector<Item>& items,
                                  std::vector<Trial>& trials) {
  if (!cfg.paths.items.empty() || !cfg.paths.trials.empty()) {
    if (cfg.paths.items.empty()) throw error("config: paths.trials is set but paths.items is not");
    if (cfg.paths.trials.empty()) throw error("config: paths.items is set but paths.trials is not");
    items = load_items(cfg.paths.items);
    trials = load_trials(cfg.paths.trials);
  } else {
    items = generate_items(cfg.oracle);
    trials = simulate_trials(items, cfg.oracle);
  }
}

inline int encoder_input_dim(const ParameterSet& params) {
  std::vector<int> layers = layer_indices(params, "enc");
  return static_cast<int>(params.tensors[static_cast<std::size_t>(layers.front())].cols);
}

inline int encoder_output_dim(const ParameterSet& params) {
  std::vector<int> layers = layer_indices(params, "enc");
  return static_cast<int>(params.tensors[static_cast<std::size_t>(layers.back())].rows);
}

inline void check_checkpoint_compat(const ParameterSet& params, const std::vector<Item>& items) {
  if (items.empty()) return;
  int want = encoder_input_dim(params);
  int have = static_cast<int>(items[0].features.cols);
  if (want != have)
    throw error("checkpoint expects feature_dim " + std::to_string(want) + " but items have " +
                std::to_string(have));
}

}  // namespace detail

// --- synth ---

inline int cmd_synth(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    validate(cfg.oracle);
    std::vector<Item> items = generate_items(cfg.oracle);
    std::vector<Trial> trials = simulate_trials(items, cfg.oracle);

    std::string out_dir = cfg.paths.out.empty() ? std::string("out/synth") : cfg.paths.out;
    detail::ensure_dir(out_dir);
    std::string items_path =
        cfg.paths.items.empty() ? out_dir + "/items.feat" : cfg.paths.items;
    std::string trials_path =
        cfg.paths.trials.empty() ? out_dir + "/trials.jsonl" : cfg.paths.trials;
    std::string latents_path =
        cfg.paths.latents.empty() ? out_dir + "/latents.tsv" : cfg.paths.latents;

    detail::ensure_parent_dir(items_path);
    detail::ensure_parent_dir(trials_path);
    detail::ensure_parent_dir(latents_path);

    std::vector<std::pair<std::string, std::string>> meta = {
        {"kind", "synthetic"},
        {"feature_dim", std::to_string(cfg.oracle.feature_dim)},
        {"frames", std::to_string(cfg.oracle.frames)},
    };
    save_features(items, items_path, meta);
    save_trials(trials, trials_path);
    save_latents(items, latents_path);

    long min_app = -1, max_app = 0, total_app = 0;
    {
      std::map<std::string, long> counts;
      for (const Item& it : items) counts[it.id] = 0;
      for (const Trial& t : trials)
        for (const std::string& id : t.item_ids) ++counts[id];
      for (const auto& kv : counts) {
        min_app = (min_app < 0) ? kv.second : std::min(min_app, kv.second);
        max_app = std::max(max_app, kv.second);
        total_app += kv.second;
      }
    }
    out << "items: " << items.size() << "\n";
    out << "trials: " << trials.size() << " (size " << cfg.oracle.trial_size << ")\n";
    out << "appearances per item: min " << min_app << ", mean "
        << fmt_g17(items.empty() ? 0.0
                                 : static_cast<double>(total_app) /
                                       static_cast<double>(items.size()))
        << ", max " << max_app << "\n";
    out << "wrote " << items_path << "\n";
    out << "wrote " << trials_path << "\n";
    out << "wrote " << latents_path << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// --- featurize ---

inline int cmd_featurize(const std::string& wav_dir, const std::string& out_dir, std::ostream& out,
                         std::ostream& err) {
  try {
    if (!std::filesystem::is_directory(wav_dir))
      throw error("featurize: '" + wav_dir + "' is not a directory");
    std::vector<std::string> wavs;
    for (const auto& entry : std::filesystem::directory_iterator(wav_dir)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (ext == ".wav") wavs.push_back(entry.path().string());
    }
    std::sort(wavs.begin(), wavs.end());
    if (wavs.empty()) {
      err << "warning: no WAV files found in '" << wav_dir << "'\n";
      return 0;
    }

    detail::ensure_dir(out_dir);
    std::vector<std::string> failures;
    int written = 0;
    for (const std::string& wav_path : wavs) {
      std::string stem = std::filesystem::path(wav_path).stem().string();
      try {
        AudioBuffer audio = read_wav(wav_path);
        MelSpectrogram mel = log_mel(audio.samples, audio.sample_rate);
        Item item;
        item.id = stem;
        item.features = mel.values;
        std::vector<std::pair<std::string, std::string>> meta = {
            {"source", std::filesystem::path(wav_path).filename().string()},
            {"sample_rate", std::to_string(mel.sample_rate)},
            {"n_mels", std::to_string(mel.n_mels)},
            {"fft_size", std::to_string(mel.fft_size)},
            {"hop", std::to_string(mel.hop)},
            {"window", std::to_string(mel.window)},
        };
        save_features({item}, out_dir + "/" + stem + ".feat", meta);
        ++written;
        out << stem << ": " << item.features.rows << " frames x " << item.features.cols
            << " mels\n";
      } catch (const std::exception& e) {
        failures.push_back(wav_path + ": " + e.what());
      }
    }
    out << "featurized " << written << "/" << wavs.size() << " files\n";
    if (!failures.empty()) {
      err << "failures:\n";
      for (const std::string& f : failures) err << "  " << f << "\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// --- train ---

inline int cmd_train(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    std::vector<Item> items;
    std::vector<Trial> trials;
    detail::load_or_synth_dataset(cfg, items, trials);
    ValidationReport report = validate_dataset(items, trials);
    if (!report.ok()) {
      std::ostringstream msg;
      msg << "dataset validation failed (" << report.issue_count() << " issues):";
      for (const std::string& s : report.dangling_references) msg << " [dangling] " << s << ";";
      for (const std::string& s : report.duplicate_ids) msg << " [duplicate] " << s << ";";
      for (const std::string& s : report.invalid_judgements) msg << " [invalid] " << s << ";";
      throw error(msg.str());
    }

    DatasetSplit split = split_dataset(items, trials, cfg.split.held_out_fraction,
                                       cfg.split.train_fraction, cfg.split.seed);
    for (const std::string& w : split.warnings) err << "warning: " << w << "\n";
    out << "items: " << items.size() << ", trials: " << trials.size() << " (train "
        << split.train_trials.size() << ", val " << split.val_trials.size() << ", eval "
        << split.eval_trials.size() << ")\n";

    EncoderConfig enc = cfg.encoder;
    if (enc.feature_dim == 0 && !items.empty())
      enc.feature_dim = static_cast<int>(items[0].features.cols);
    validate(enc);
    MarginConfig margin = cfg.margin;
    validate(margin);

    ParameterSet params = init_params(enc, margin);
    TrainResult tr = train(cfg.train, items, split, params);

    std::string out_dir = cfg.paths.out.empty() ? std::string("out/train") : cfg.paths.out;
    detail::ensure_dir(out_dir);
    detail::write_text_file(out_dir + "/history.csv", detail::history_csv(tr.history));
    save_checkpoint(tr.best, out_dir + "/checkpoint_best.txt");
    save_checkpoint(tr.last, out_dir + "/checkpoint_last.txt");
    detail::write_text_file(out_dir + "/config.json", dump_experiment_config(cfg));

    PooledTable pooled = pool_items(items);
    Metrics eval{};
    if (!split.eval_trials.empty()) eval = eval_metrics(tr.best, split.eval_trials, pooled);
    detail::write_text_file(out_dir + "/metrics.txt", detail::metrics_text(eval));

    out << "steps run: " << tr.steps_run << ", best step: " << tr.best_step
        << " (validation FR " << fmt_g17(tr.best_val_fr) << ")\n";
    out << "eval FR: " << fmt_g17(eval.fr_percent) << ", eval WAT: " << fmt_g17(eval.wat_percent)
        << " over " << eval.n_relations << " relations in " << eval.n_trials << " trials\n";
    out << "wrote " << out_dir << "/history.csv, checkpoint_best.txt, checkpoint_last.txt, "
        << "metrics.txt, config.json\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// --- eval ---

inline int cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                    std::ostream& out, std::ostream& err) {
  try {
    ParameterSet params = load_checkpoint(checkpoint_path);
    std::vector<Item> items;
    std::vector<Trial> trials;
    detail::load_or_synth_dataset(cfg, items, trials);
    detail::check_checkpoint_compat(params, items);

    DatasetSplit split = split_dataset(items, trials, cfg.split.held_out_fraction,
                                       cfg.split.train_fraction, cfg.split.seed);
    for (const std::string& w : split.warnings) err << "warning: " << w << "\n";

    PooledTable pooled = pool_items(items);
    Metrics eval{};
    if (!split.eval_trials.empty()) eval = eval_metrics(params, split.eval_trials, pooled);
    out << "eval FR: " << fmt_g17(eval.fr_percent) << ", eval WAT: " << fmt_g17(eval.wat_percent)
        << " over " << eval.n_relations << " relations in " << eval.n_trials << " trials\n";

    if (!cfg.paths.out.empty()) {
      detail::ensure_dir(cfg.paths.out);
      detail::write_text_file(cfg.paths.out + "/metrics.txt", detail::metrics_text(eval));
      out << "wrote " << cfg.paths.out << "/metrics.txt\n";
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// --- ablate ---

inline int cmd_ablate(const ExperimentConfig& cfg, const std::vector<AblationRow>& rows,
                      std::ostream& out, std::ostream& err) {
  try {
    std::vector<Item> items;
    std::vector<Trial> trials;
    const std::vector<Item>* fixed_items = nullptr;
    const std::vector<Trial>* fixed_trials = nullptr;
    if (!cfg.paths.items.empty() || !cfg.paths.trials.empty()) {
      detail::load_or_synth_dataset(cfg, items, trials);
      fixed_items = &items;
      fixed_trials = &trials;
    }

    AblationResult result =
        run_ablation(cfg, rows.empty() ? standard_ablation_rows() : rows, fixed_items,
                     fixed_trials);

    out << format_ablation_table(result);

    std::string out_dir = cfg.paths.out.empty() ? std::string("out/ablate") : cfg.paths.out;
    detail::ensure_dir(out_dir);
    detail::write_text_file(out_dir + "/ablation.csv", format_ablation_csv(result));
    detail::write_text_file(out_dir + "/ablation_cells.csv", format_ablation_cells_csv(result));
    detail::write_text_file(out_dir + "/ablation.txt", format_ablation_table(result));
    out << "wrote " << out_dir << "/ablation.csv, ablation_cells.csv, ablation.txt\n";

    int failed = 0;
    for (const CellResult& c : result.cells)
      if (!c.ok) {
        ++failed;
        err << "cell failed: " << c.row_name << " seed " << c.seed << ": " << c.message << "\n";
      }
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// --- export ---

inline int cmd_export(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                      std::ostream& out, std::ostream& err) {
  try {
    ParameterSet params = load_checkpoint(checkpoint_path);
    std::vector<Item> items;
    std::vector<Trial> trials;
    detail::load_or_synth_dataset(cfg, items, trials);
    detail::check_checkpoint_compat(params, items);

    std::vector<ItemScore> scores = count_scores(trials);
    std::map<std::string, const ItemScore*> score_by_id;
    for (const ItemScore& s : scores) score_by_id[s.item_id] = &s;
    std::map<std::string, std::string> attribute_by_id;
    for (const Trial& t : trials)
      for (const std::string& id : t.item_ids)
        if (!attribute_by_id.count(id)) attribute_by_id[id] = t.attribute;

    std::vector<std::vector<double>> embeddings;
    embeddings.reserve(items.size());
    for (const Item& it : items) embeddings.push_back(encode(params, it.features));
    PcaResult pca = pca_project(embeddings);

    int d = detail::encoder_output_dim(params);
    std::vector<SpaceRow> rows;
    rows.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      SpaceRow r;
      r.item_id = items[i].id;
      r.embedding = embeddings[i];
      r.pca_x = pca.coords[i][0];
      r.pca_y = pca.coords[i][1];
      auto s = score_by_id.find(items[i].id);
      r.score = (s == score_by_id.end()) ? 0.0 : s->second->score;
      auto a = attribute_by_id.find(items[i].id);
      r.attribute = (a == attribute_by_id.end()) ? std::string() : a->second;
      rows.push_back(std::move(r));
    }

    std::string out_dir = cfg.paths.out.empty() ? std::string("out/export") : cfg.paths.out;
    detail::ensure_dir(out_dir);
    export_space(rows, d, out_dir + "/space.csv");
    {
      std::ostringstream s;
      s << "item_id\tscore\n";
      for (const ItemScore& sc : scores) s << sc.item_id << "\t" << fmt_g17(sc.score) << "\n";
      detail::write_text_file(out_dir + "/scores.tsv", s.str());
    }
    out << "exported " << rows.size() << " items (d=" << d << ", explained variance "
        << fmt_g17(pca.explained_variance_fraction[0]) << " / "
        << fmt_g17(pca.explained_variance_fraction[1]) << ")\n";
    out << "wrote " << out_dir << "/space.csv, scores.tsv\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bwsnet
