#pragma once
// Ablation harness: runs the four standard configurations
//   A-f      fixed margin alpha = mu
//   A-l      learned margins, lambda_dmc = 0, lambda_fr = 0
//   A-l-d    learned margins, lambda_dmc = 1, lambda_fr = 0
//   A-l-d-fr learned margins, lambda_dmc = 1, lambda_fr = 1
// across n_seeds seeds each, and reports mean +- std of the eval-set FR and
// WAT per configuration plus a mean-pairwise-distance collapse diagnostic.
// Custom (lambda_dmc, lambda_fr, margin mode) cells can be appended.
// Cells run in parallel; results are reduced in a fixed order.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "bwsnet/analysis.hpp"
#include "bwsnet/config.hpp"
#include "bwsnet/core.hpp"
#include "bwsnet/model.hpp"
#include "bwsnet/synth.hpp"
#include "bwsnet/trainer.hpp"
#include "bwsnet/trial.hpp"

namespace bwsnet {

struct AblationRow {
  std::string name;
  MarginMode margin_mode = MarginMode::learned;
  double lambda_dmc = 0.0;
  double lambda_fr = 0.0;
};

inline std::vector<AblationRow> standard_ablation_rows() {
  return {
      {"A-f", MarginMode::fixed, 0.0, 0.0},
      {"A-l", MarginMode::learned, 0.0, 0.0},
      {"A-l-d", MarginMode::learned, 1.0, 0.0},
      {"A-l-d-fr", MarginMode::learned, 1.0, 1.0},
  };
}

struct CellResult {
  std::string row_name;
  std::uint64_t seed = 0;
  double fr = 0.0;
  double wat = 0.0;
  double mean_pairwise_dist = 0.0;  // on last params over eval items
  long best_step = 0;
  bool ok = false;
  std::string message;  // failure description when !ok
};

struct RowSummary {
  std::string name;
  double fr_mean = 0.0, fr_std = 0.0;
  double wat_mean = 0.0, wat_std = 0.0;
  double mpd_mean = 0.0;
  int n_ok = 0;
  int n_failed = 0;
};

struct AblationResult {
  std::vector<CellResult> cells;     // row-major: rows x seeds, fixed order
  std::vector<RowSummary> summary;   // one per row
};

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  sd = std::sqrt(acc / static_cast<double>(xs.size()));  // population std; 0 for one seed
}

inline CellResult run_ablation_cell(const ExperimentConfig& base, const AblationRow& row,
                                    std::uint64_t seed, const std::vector<Item>* fixed_items,
                                    const std::vector<Trial>* fixed_trials) {
  CellResult cell;
  cell.row_name = row.name;
  cell.seed = seed;
  try {
    std::vector<Item> synth_items;
    std::vector<Trial> synth_trials;
    const std::vector<Item>* items = fixed_items;
    const std::vector<Trial>* trials = fixed_trials;
    if (items == nullptr || trials == nullptr) {
      OracleConfig oc = base.oracle;
      oc.seed = seed;
      synth_items = generate_items(oc);
      synth_trials = simulate_trials(synth_items, oc);
      items = &synth_items;
      trials = &synth_trials;
    }

    DatasetSplit split = split_dataset(*items, *trials, base.split.held_out_fraction,
                                       base.split.train_fraction, seed);
    if (split.eval_trials.empty()) throw error("ablation cell: eval trial set is empty");

    EncoderConfig enc = base.encoder;
    if (enc.feature_dim == 0 && !items->empty())
      enc.feature_dim = static_cast<int>((*items)[0].features.cols);
    enc.seed = seed;
    MarginConfig margin = base.margin;

    TrainConfig tc = base.train;
    tc.seed = seed;
    tc.margin_mode = row.margin_mode;
    tc.lambda_dmc = row.lambda_dmc;
    tc.lambda_fr = row.lambda_fr;
    tc.mu = margin.mu;
    tc.delta = margin.delta;

    ParameterSet params = init_params(enc, margin);
    TrainResult tr = train(tc, *items, split, params);

    PooledTable pooled = pool_items(*items);
    Metrics m = eval_metrics(tr.best, split.eval_trials, pooled);
    cell.fr = m.fr_percent;
    cell.wat = m.wat_percent;
    cell.mean_pairwise_dist = mean_pairwise_distance(tr.last, split.eval_trials, pooled);
    cell.best_step = tr.best_step;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.message = e.what();
  }
  return cell;
}

}  // namespace detail

// Runs rows x seeds cells.  When fixed_items/fixed_trials are given the
// dataset is shared across seeds (split/init/batching still vary by seed);
// otherwise each seed draws a fresh synthetic dataset from the oracle.
inline AblationResult run_ablation(const ExperimentConfig& cfg,
                                   const std::vector<AblationRow>& rows,
                                   const std::vector<Item>* fixed_items = nullptr,
                                   const std::vector<Trial>* fixed_trials = nullptr) {
  if (rows.empty()) throw error("run_ablation: no rows");
  AblationResult result;

  std::vector<std::future<CellResult>> futures;
  futures.reserve(rows.size() * static_cast<std::size_t>(cfg.n_seeds));
  for (const AblationRow& row : rows)
    for (int k = 0; k < cfg.n_seeds; ++k) {
      std::uint64_t seed = cfg.train.seed + static_cast<std::uint64_t>(k);
      futures.push_back(std::async(std::launch::async, detail::run_ablation_cell, cfg, row, seed,
                                   fixed_items, fixed_trials));
    }

  for (auto& f : futures) result.cells.push_back(f.get());

  std::size_t idx = 0;
  for (const AblationRow& row : rows) {
    RowSummary s;
    s.name = row.name;
    std::vector<double> frs, wats, mpds;
    for (int k = 0; k < cfg.n_seeds; ++k, ++idx) {
      const CellResult& c = result.cells[idx];
      if (c.ok) {
        frs.push_back(c.fr);
        wats.push_back(c.wat);
        mpds.push_back(c.mean_pairwise_dist);
        ++s.n_ok;
      } else {
        ++s.n_failed;
      }
    }
    detail::mean_std(frs, s.fr_mean, s.fr_std);
    detail::mean_std(wats, s.wat_mean, s.wat_std);
    double dummy;
    detail::mean_std(mpds, s.mpd_mean, dummy);
    result.summary.push_back(s);
  }
  return result;
}

// Human-readable results table (FR / WAT as mean +- std, collapse diagnostic).
inline std::string format_ablation_table(const AblationResult& result) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %-18s %-18s %-14s %s\n", "config", "FR (%)", "WAT (%)",
                "mean pair dist", "failures");
  out << line;
  for (const RowSummary& s : result.summary) {
    std::snprintf(line, sizeof(line), "%-12s %6.2f +- %-8.2f %6.2f +- %-8.2f %-14.6g %d\n",
                  s.name.c_str(), s.fr_mean, s.fr_std, s.wat_mean, s.wat_std, s.mpd_mean,
                  s.n_failed);
    out << line;
  }
  return out.str();
}

// Machine-readable summary, one row per configuration.
inline std::string format_ablation_csv(const AblationResult& result) {
  std::ostringstream out;
  out << "config,fr_mean,fr_std,wat_mean,wat_std,mean_pairwise_dist,n_ok,n_failed\n";
  for (const RowSummary& s : result.summary)
    out << s.name << "," << fmt_g17(s.fr_mean) << "," << fmt_g17(s.fr_std) << ","
        << fmt_g17(s.wat_mean) << "," << fmt_g17(s.wat_std) << "," << fmt_g17(s.mpd_mean) << ","
        << s.n_ok << "," << s.n_failed << "\n";
  return out.str();
}

// Per-cell detail, one row per (config, seed) cell.
inline std::string format_ablation_cells_csv(const AblationResult& result) {
  std::ostringstream out;
  out << "config,seed,fr,wat,mean_pairwise_dist,best_step,status,message\n";
  for (const CellResult& c : result.cells) {
    std::string msg = c.message;
    for (char& ch : msg)
      if (ch == ',' || ch == '\n') ch = ';';
    out << c.row_name << "," << c.seed << "," << fmt_g17(c.fr) << "," << fmt_g17(c.wat) << ","
        << fmt_g17(c.mean_pairwise_dist) << "," << c.best_step << "," << (c.ok ? "ok" : "failed")
        << "," << msg << "\n";
  }
  return out.str();
}

}  // namespace bwsnet
