#pragma once
// BWS data model: items, trials, derived distance relations, dataset
// validation, and the trial-wise train/validation/eval split.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bwsnet/core.hpp"

namespace bwsnet {

struct Item {
  std::string id;
  Mat features;                  // frames x feature_dim
  std::optional<double> latent;  // ground truth, synthetic data only
};

struct Trial {
  std::string attribute;
  std::vector<std::string> item_ids;  // N distinct ids
  int best = 0;
  int worst = 0;

  int size() const { return static_cast<int>(item_ids.size()); }
  // Neutral positions in index order, skipping best and worst.
  std::vector<int> neutral_indices() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
      if (i != best && i != worst) out.push_back(i);
    return out;
  }
};

enum class RelationKind { best_neutral, worst_neutral };

struct Relation {
  std::pair<std::string, std::string> far;   // always (best, worst)
  std::pair<std::string, std::string> near;  // (anchor, neutral)
  RelationKind kind = RelationKind::best_neutral;
  int trial_index = -1;
};

// Returns empty string when the trial is well-formed, else a reason.
inline std::string trial_problem(const Trial& t) {
  if (t.size() < 3) return "trial has fewer than 3 items";
  if (t.best < 0 || t.best >= t.size()) return "best index out of range";
  if (t.worst < 0 || t.worst >= t.size()) return "worst index out of range";
  if (t.best == t.worst) return "best equals worst";
  std::set<std::string> seen(t.item_ids.begin(), t.item_ids.end());
  if (static_cast<int>(seen.size()) != t.size()) return "duplicate item ids in trial";
  return "";
}

// One trial yields 2(N-2) distance inequalities, grouped by anchor: all
// best-anchored relations first (in neutral order), then all worst-anchored.
inline std::vector<Relation> derive_relations(const Trial& t, int trial_index = -1) {
  std::string why = trial_problem(t);
  if (!why.empty()) throw error("derive_relations: " + why);
  const std::string& b = t.item_ids[t.best];
  const std::string& w = t.item_ids[t.worst];
  std::vector<int> neutrals = t.neutral_indices();
  std::vector<Relation> out;
  out.reserve(2 * neutrals.size());
  for (int n : neutrals)
    out.push_back({{b, w}, {b, t.item_ids[n]}, RelationKind::best_neutral, trial_index});
  for (int n : neutrals)
    out.push_back({{b, w}, {w, t.item_ids[n]}, RelationKind::worst_neutral, trial_index});
  return out;
}

struct DatasetSplit {
  std::vector<Trial> train_trials;
  std::vector<Trial> val_trials;
  std::vector<Trial> eval_trials;
  std::set<std::string> held_out_item_ids;
  std::vector<std::string> warnings;
};

// Hold out a seeded fraction of items; trials touching them form the eval
// set; remaining trials are shuffled and split train_fraction : rest.
inline DatasetSplit split_dataset(const std::vector<Item>& items, const std::vector<Trial>& trials,
                                  double held_out_fraction, double train_fraction,
                                  std::uint64_t seed) {
  if (!(held_out_fraction > 0.0 && held_out_fraction < 1.0))
    throw error("split_dataset: held_out_fraction must lie in (0,1)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw error("split_dataset: train_fraction must lie in (0,1)");

  Rng rng(seed);
  std::vector<std::string> ids;
  ids.reserve(items.size());
  for (const Item& it : items) ids.push_back(it.id);
  rng.shuffle(ids);

  DatasetSplit split;
  std::size_t n_held = static_cast<std::size_t>(held_out_fraction * static_cast<double>(items.size()));
  for (std::size_t i = 0; i < n_held; ++i) split.held_out_item_ids.insert(ids[i]);

  std::vector<Trial> retained;
  for (const Trial& t : trials) {
    bool touches = false;
    for (const std::string& id : t.item_ids)
      if (split.held_out_item_ids.count(id)) {
        touches = true;
        break;
      }
    if (touches)
      split.eval_trials.push_back(t);
    else
      retained.push_back(t);
  }
  if (split.eval_trials.empty())
    split.warnings.push_back("eval set empty: no trial references a held-out item");

  rng.shuffle(retained);
  std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(retained.size()));
  split.train_trials.assign(retained.begin(), retained.begin() + n_train);
  split.val_trials.assign(retained.begin() + n_train, retained.end());
  return split;
}

struct ValidationReport {
  std::vector<std::string> dangling_references;
  std::vector<std::string> duplicate_ids;
  std::vector<std::string> invalid_judgements;

  bool ok() const {
    return dangling_references.empty() && duplicate_ids.empty() && invalid_judgements.empty();
  }
  std::size_t issue_count() const {
    return dangling_references.size() + duplicate_ids.size() + invalid_judgements.size();
  }
};

inline ValidationReport validate_dataset(const std::vector<Item>& items,
                                         const std::vector<Trial>& trials) {
  ValidationReport report;
  std::set<std::string> known;
  for (const Item& it : items) {
    if (!known.insert(it.id).second)
      report.duplicate_ids.push_back("duplicate item id '" + it.id + "'");
  }
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    std::string why = trial_problem(t);
    if (!why.empty())
      report.invalid_judgements.push_back("trial " + std::to_string(i) + ": " + why);
    for (const std::string& id : t.item_ids)
      if (!known.count(id))
        report.dangling_references.push_back("trial " + std::to_string(i) +
                                             " references unknown item '" + id + "'");
  }
  return report;
}

}  // namespace bwsnet
