#pragma once
// Training: attribute-balanced batch assembly over whole trials, ADAM with
// bias correction, margin-free FR/WAT evaluation metrics, and the training
// loop with early stopping on validation FR (best checkpoint = argmax
// validation FR, ties resolved to the earliest evaluation).

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bwsnet/autodiff.hpp"
#include "bwsnet/core.hpp"
#include "bwsnet/losses.hpp"
#include "bwsnet/model.hpp"
#include "bwsnet/trial.hpp"

namespace bwsnet {

struct TrainConfig {
  int batch_size = 80;  // samples; trials per batch = batch_size / N
  double learning_rate = 1e-4;
  double lambda_dmc = 1.0;
  double lambda_fr = 1.0;
  double mu = 1.0;
  double delta = 1.0;
  long max_steps = 20000;
  long eval_every = 500;
  int patience = 10;  // evaluations without validation-FR improvement
  std::uint64_t seed = 1;
  FrMode fr_mode = FrMode::smooth;
  double temperature = 0.1;
  MarginMode margin_mode = MarginMode::learned;
  GammaKind gamma = GammaKind::relu_neg;
  bool balance_by_attribute = true;
};

struct Metrics {
  double fr_percent = 0.0;
  double wat_percent = 0.0;
  long n_relations = 0;
  long n_trials = 0;
};

struct HistoryRow {
  long step = 0;
  double dmrc = 0.0, dmc = 0.0, fr = 0.0, total = 0.0;  // train means since last row
  double val_fr = 0.0, val_wat = 0.0;
  double margin_min = 0.0, margin_mean = 0.0, margin_max = 0.0;
};

struct TrainHistory {
  std::vector<HistoryRow> rows;
};

struct TrainResult {
  ParameterSet best;
  ParameterSet last;
  TrainHistory history;
  long best_step = 0;
  double best_val_fr = 0.0;
  long steps_run = 0;
};

// Seeded shuffle into batches of whole trials (indices into `trials`).
// With balancing across several attributes, every batch carries equal trial
// counts per attribute (+-1, extras rotating deterministically) and the
// epoch remainder that cannot fill a balanced batch is dropped.  With a
// single attribute (or balancing off) the final partial batch is kept.
inline std::vector<std::vector<int>> make_batches(const std::vector<Trial>& trials, int batch_size,
                                                  std::uint64_t seed, bool balance_by_attribute) {
  if (trials.empty()) return {};
  int N = trials[0].size();
  for (const Trial& t : trials)
    if (t.size() != N) throw error("make_batches: trials must share one size N");
  if (batch_size < N) throw error("make_batches: batch_size smaller than trial size");
  int per_batch = batch_size / N;

  Rng rng(seed);
  std::vector<std::vector<int>> batches;

  if (!balance_by_attribute) {
    std::vector<int> order(trials.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    for (std::size_t pos = 0; pos + 1 <= order.size(); pos += static_cast<std::size_t>(per_batch)) {
      std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(per_batch));
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
  }

  // Group by attribute in first-appearance order, shuffle within groups.
  std::vector<std::string> attrs;
  std::map<std::string, std::vector<int>> groups;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const std::string& a = trials[i].attribute;
    if (!groups.count(a)) attrs.push_back(a);
    groups[a].push_back(static_cast<int>(i));
  }
  for (const std::string& a : attrs) rng.shuffle(groups[a]);

  int n_attrs = static_cast<int>(attrs.size());
  if (n_attrs == 1) {
    // Single attribute degenerates to plain batching of the shuffled list.
    const std::vector<int>& order = groups[attrs[0]];
    for (std::size_t pos = 0; pos + 1 <= order.size(); pos += static_cast<std::size_t>(per_batch)) {
      std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(per_batch));
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
  }

  int base = per_batch / n_attrs;
  int extra = per_batch % n_attrs;
  std::vector<std::size_t> cursor(static_cast<std::size_t>(n_attrs), 0);
  for (int batch_index = 0;; ++batch_index) {
    std::vector<int> need(static_cast<std::size_t>(n_attrs), base);
    for (int e = 0; e < extra; ++e)
      ++need[static_cast<std::size_t>((batch_index * extra + e) % n_attrs)];
    bool feasible = true;
    for (int a = 0; a < n_attrs; ++a)
      if (cursor[static_cast<std::size_t>(a)] + static_cast<std::size_t>(need[static_cast<std::size_t>(a)]) >
          groups[attrs[static_cast<std::size_t>(a)]].size()) {
        feasible = false;
        break;
      }
    if (!feasible) break;  // drop the epoch remainder
    std::vector<int> batch;
    batch.reserve(static_cast<std::size_t>(per_batch));
    for (int a = 0; a < n_attrs; ++a)
      for (int k = 0; k < need[static_cast<std::size_t>(a)]; ++k)
        batch.push_back(groups[attrs[static_cast<std::size_t>(a)]][cursor[static_cast<std::size_t>(a)]++]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

// --- ADAM ---

struct AdamState {
  std::vector<std::vector<double>> m, v;
  long t = 0;

  explicit AdamState(const ParameterSet& ps) {
    for (const auto& tensor : ps.tensors) {
      m.emplace_back(tensor.data.size(), 0.0);
      v.emplace_back(tensor.data.size(), 0.0);
    }
  }
};

inline void adam_step(ParameterSet& params, const Gradient& grad, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  ++state.t;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t ti = 0; ti < params.tensors.size(); ++ti) {
    auto& data = params.tensors[ti].data;
    const auto& g = grad.by_tensor[ti];
    auto& m = state.m[ti];
    auto& v = state.v[ti];
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw error("adam_step: non-finite gradient for tensor '" + params.tensors[ti].name + "'");
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

// --- Evaluation metrics (margin-free, non-strict: ties are fulfilled). ---

using PooledTable = std::map<std::string, std::vector<double>>;

inline PooledTable pool_items(const std::vector<Item>& items) {
  PooledTable pooled;
  for (const Item& it : items) {
    if (pooled.count(it.id)) throw error("pool_items: duplicate item id '" + it.id + "'");
    pooled[it.id] = mean_pool(it.features);
  }
  return pooled;
}

inline Metrics eval_metrics(const ParameterSet& params, const std::vector<Trial>& trials,
                            const PooledTable& pooled) {
  Metrics metrics;
  std::map<std::string, std::vector<double>> cache;
  auto embed = [&](const std::string& id) -> const std::vector<double>& {
    auto hit = cache.find(id);
    if (hit != cache.end()) return hit->second;
    auto p = pooled.find(id);
    if (p == pooled.end()) throw error("eval_metrics: trial references missing item '" + id + "'");
    return cache.emplace(id, encode_pooled(params, p->second)).first->second;
  };

  long fulfilled = 0;
  for (const Trial& t : trials) {
    std::vector<Relation> relations = derive_relations(t);
    bool all_ok = true;
    for (const Relation& r : relations) {
      double d_far = euclidean(embed(r.far.first), embed(r.far.second));
      double d_near = euclidean(embed(r.near.first), embed(r.near.second));
      bool ok = d_far >= d_near;
      if (ok)
        ++fulfilled;
      else
        all_ok = false;
    }
    metrics.n_relations += static_cast<long>(relations.size());
    if (all_ok) ++metrics.wat_percent;  // trial counter until normalized below
    ++metrics.n_trials;
  }
  if (metrics.n_relations > 0)
    metrics.fr_percent = 100.0 * static_cast<double>(fulfilled) /
                         static_cast<double>(metrics.n_relations);
  if (metrics.n_trials > 0)
    metrics.wat_percent = 100.0 * metrics.wat_percent / static_cast<double>(metrics.n_trials);
  return metrics;
}

// Mean pairwise embedding distance over the items a trial list references
// (collapse diagnostic).
inline double mean_pairwise_distance(const ParameterSet& params, const std::vector<Trial>& trials,
                                     const PooledTable& pooled) {
  std::vector<std::string> ids;
  {
    std::map<std::string, bool> seen;
    for (const Trial& t : trials)
      for (const std::string& id : t.item_ids)
        if (!seen.count(id)) {
          seen[id] = true;
          ids.push_back(id);
        }
  }
  std::vector<std::vector<double>> embs;
  embs.reserve(ids.size());
  for (const std::string& id : ids) {
    auto p = pooled.find(id);
    if (p == pooled.end()) throw error("mean_pairwise_distance: missing item '" + id + "'");
    embs.push_back(encode_pooled(params, p->second));
  }
  if (embs.size() < 2) return 0.0;
  double acc = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < embs.size(); ++i)
    for (std::size_t j = i + 1; j < embs.size(); ++j) {
      acc += euclidean(embs[i], embs[j]);
      ++count;
    }
  return acc / static_cast<double>(count);
}

// --- Training loop. ---

namespace detail {

struct MarginStats {
  double min = 0.0, mean = 0.0, max = 0.0;
};

inline MarginStats margin_stats(const ParameterSet& params, const TrainConfig& cfg,
                                const std::vector<Trial>& trials, const PooledTable& pooled) {
  if (cfg.margin_mode == MarginMode::fixed) return {cfg.mu, cfg.mu, cfg.mu};
  MarginConfig mcfg;
  mcfg.mu = cfg.mu;
  mcfg.delta = cfg.delta;
  std::map<std::string, std::vector<double>> cache;
  auto embed = [&](const std::string& id) -> const std::vector<double>& {
    auto hit = cache.find(id);
    if (hit != cache.end()) return hit->second;
    return cache.emplace(id, encode_pooled(params, pooled.at(id))).first->second;
  };
  double lo = 0.0, hi = 0.0, acc = 0.0;
  long n = 0;
  for (const Trial& t : trials) {
    const std::vector<double>& h_b = embed(t.item_ids[static_cast<std::size_t>(t.best)]);
    const std::vector<double>& h_w = embed(t.item_ids[static_cast<std::size_t>(t.worst)]);
    for (int i : t.neutral_indices()) {
      const std::vector<double>& h_n = embed(t.item_ids[static_cast<std::size_t>(i)]);
      for (double a : {margin_plain(params, mcfg, h_b, h_w, h_n),
                       margin_plain(params, mcfg, h_w, h_b, h_n)}) {
        if (n == 0) {
          lo = hi = a;
        } else {
          lo = std::min(lo, a);
          hi = std::max(hi, a);
        }
        acc += a;
        ++n;
      }
    }
  }
  if (n == 0) return {cfg.mu, cfg.mu, cfg.mu};
  return {lo, acc / static_cast<double>(n), hi};
}

}  // namespace detail

inline TrialLossConfig trial_loss_config(const TrainConfig& cfg) {
  TrialLossConfig loss_cfg;
  loss_cfg.mu = cfg.mu;
  loss_cfg.delta = cfg.delta;
  loss_cfg.lambda_dmc = cfg.lambda_dmc;
  loss_cfg.lambda_fr = cfg.lambda_fr;
  loss_cfg.margin_mode = cfg.margin_mode;
  loss_cfg.gamma = cfg.gamma;
  loss_cfg.fr_mode = cfg.fr_mode;
  loss_cfg.temperature = cfg.temperature;
  return loss_cfg;
}

inline TrainResult train(const TrainConfig& cfg, const std::vector<Item>& items,
                         const DatasetSplit& split, const ParameterSet& initial_params) {
  if (split.train_trials.empty()) throw error("train: training trial set is empty");
  if (split.val_trials.empty()) throw error("train: validation trial set is empty");
  if (cfg.eval_every < 1) throw error("train: eval_every must be >= 1");
  if (cfg.patience < 1) throw error("train: patience must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw error("train: learning_rate must be positive");

  PooledTable pooled = pool_items(items);
  TrialLossConfig loss_cfg = trial_loss_config(cfg);

  TrainResult result;
  result.last = initial_params;
  AdamState adam(result.last);

  // Loss-component accumulators between evaluation points.
  double acc_dmrc = 0.0, acc_dmc = 0.0, acc_fr = 0.0, acc_total = 0.0;
  long acc_batches = 0;

  auto evaluate = [&](long step) {
    Metrics val = eval_metrics(result.last, split.val_trials, pooled);
    detail::MarginStats ms = detail::margin_stats(result.last, cfg, split.val_trials, pooled);
    HistoryRow row;
    row.step = step;
    if (acc_batches > 0) {
      row.dmrc = acc_dmrc / static_cast<double>(acc_batches);
      row.dmc = acc_dmc / static_cast<double>(acc_batches);
      row.fr = acc_fr / static_cast<double>(acc_batches);
      row.total = acc_total / static_cast<double>(acc_batches);
    }
    acc_dmrc = acc_dmc = acc_fr = acc_total = 0.0;
    acc_batches = 0;
    row.val_fr = val.fr_percent;
    row.val_wat = val.wat_percent;
    row.margin_min = ms.min;
    row.margin_mean = ms.mean;
    row.margin_max = ms.max;
    result.history.rows.push_back(row);
    return val.fr_percent;
  };

  double fr0 = evaluate(0);
  result.best = result.last;
  result.best_step = 0;
  result.best_val_fr = fr0;
  int evals_since_best = 0;

  long step = 0;
  bool stop = false;
  for (std::uint64_t epoch = 0; !stop; ++epoch) {
    std::vector<std::vector<int>> batches =
        make_batches(split.train_trials, cfg.batch_size, cfg.seed + epoch, cfg.balance_by_attribute);
    if (batches.empty()) throw error("train: batch assembly produced no batches");
    for (const std::vector<int>& batch : batches) {
      if (step >= cfg.max_steps) {
        stop = true;
        break;
      }

      Tape tape(result.last);
      TapeWiring wiring = TapeWiring::build(tape, result.last);
      int batch_sum = -1;
      double sum_dmrc = 0.0, sum_dmc = 0.0, sum_fr = 0.0;
      for (int trial_index : batch) {
        const Trial& t = split.train_trials[static_cast<std::size_t>(trial_index)];
        std::vector<int> embeddings;
        embeddings.reserve(t.item_ids.size());
        for (const std::string& id : t.item_ids) {
          auto p = pooled.find(id);
          if (p == pooled.end()) throw error("train: trial references missing item '" + id + "'");
          embeddings.push_back(encode_on_tape(tape, wiring, p->second, id));
        }
        TrialLossNodes nodes = trial_loss_on_tape(tape, wiring, loss_cfg, embeddings, t.best, t.worst);
        batch_sum = (batch_sum < 0) ? nodes.total : tape.add(batch_sum, nodes.total);
        sum_dmrc += tape.value(nodes.dmrc);
        sum_dmc += tape.value(nodes.dmc);
        sum_fr += tape.value(nodes.fr);
      }
      int batch_loss = tape.scale(batch_sum, 1.0 / static_cast<double>(batch.size()));
      acc_dmrc += sum_dmrc / static_cast<double>(batch.size());
      acc_dmc += sum_dmc / static_cast<double>(batch.size());
      acc_fr += sum_fr / static_cast<double>(batch.size());
      acc_total += tape.value(batch_loss);
      ++acc_batches;

      Gradient grad = tape.backward(batch_loss);
      adam_step(result.last, grad, adam, cfg.learning_rate);
      ++step;

      if (step % cfg.eval_every == 0) {
        double fr = evaluate(step);
        if (fr > result.best_val_fr) {
          result.best_val_fr = fr;
          result.best_step = step;
          result.best = result.last;
          evals_since_best = 0;
        } else {
          ++evals_since_best;
          if (evals_since_best >= cfg.patience) {
            stop = true;
            break;
          }
        }
      }
    }
  }
  result.steps_run = step;
  return result;
}

}  // namespace bwsnet
