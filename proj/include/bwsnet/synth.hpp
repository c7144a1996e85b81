#pragma once
// Synthetic-judgement oracle: items with a scalar ground-truth latent and a
// smooth injective latent-to-feature map, plus trial simulation with a
// noisy judge (score = latent + Normal(0, sigma); best = argmax, worst =
// argmin). Provides the verification oracle human datasets cannot.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "bwsnet/core.hpp"
#include "bwsnet/trial.hpp"

namespace bwsnet {

struct OracleConfig {
  int n_items = 200;
  int feature_dim = 20;
  int frames = 30;
  double noise_sigma = 0.0;    // judge noise on latent scores
  int trials_per_item = 8;     // minimum appearances per item
  int trial_size = 4;          // N
  double feature_noise = 0.05; // per-frame feature perturbation amplitude
  std::uint64_t seed = 1;
  std::string attribute = "synthetic";
};

inline void validate(const OracleConfig& cfg) {
  if (cfg.trial_size < 3) throw error("oracle config: trial_size must be >= 3");
  if (cfg.n_items < cfg.trial_size)
    throw error("oracle config: n_items must be >= trial_size");
  if (cfg.trials_per_item < 1) throw error("oracle config: trials_per_item must be >= 1");
  if (cfg.feature_dim < 1) throw error("oracle config: feature_dim must be >= 1");
  if (cfg.frames < 1) throw error("oracle config: frames must be >= 1");
  if (cfg.noise_sigma < 0.0) throw error("oracle config: noise_sigma must be >= 0");
  if (cfg.feature_noise < 0.0) throw error("oracle config: feature_noise must be >= 0");
}

// Fixed random basis used by the latent-to-feature map.
inline Mat oracle_basis(int feature_dim, Rng& rng) {
  Mat basis(feature_dim, 3);
  for (double& x : basis.a) x = rng.uniform(-1.0, 1.0);
  return basis;
}

// Feature matrix for one latent value: basis * [v, v^2, sin v] broadcast
// over frames, plus per-frame perturbation drawn from rng.
inline Mat synth_feature_matrix(double v, const Mat& basis, int frames, double feature_noise,
                                Rng& rng) {
  const double phi[3] = {v, v * v, std::sin(v)};
  std::vector<double> base(static_cast<std::size_t>(basis.rows), 0.0);
  for (int j = 0; j < basis.rows; ++j)
    base[j] = basis.at(j, 0) * phi[0] + basis.at(j, 1) * phi[1] + basis.at(j, 2) * phi[2];
  Mat features(frames, basis.rows);
  for (int f = 0; f < frames; ++f)
    for (int j = 0; j < basis.rows; ++j)
      features.at(f, j) = base[j] + feature_noise * rng.gaussian();
  return features;
}

inline std::string synth_item_id(int index) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "item_%04d", index);
  return std::string(buf);
}

inline std::vector<Item> generate_items(const OracleConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  Mat basis = oracle_basis(cfg.feature_dim, rng);
  std::vector<Item> items;
  items.reserve(static_cast<std::size_t>(cfg.n_items));
  for (int i = 0; i < cfg.n_items; ++i) {
    double v = rng.uniform();
    Item item;
    item.id = synth_item_id(i);
    item.latent = v;
    item.features = synth_feature_matrix(v, basis, cfg.frames, cfg.feature_noise, rng);
    items.push_back(std::move(item));
  }
  return items;
}

// Seeded shuffling into consecutive N-tuples, repeated trials_per_item
// times. When n_items is not a multiple of N, each pass emits one extra
// trial combining the permutation tail with items from its front, so every
// item still appears at least once per pass.
inline std::vector<Trial> simulate_trials(const std::vector<Item>& items,
                                          const OracleConfig& cfg) {
  validate(cfg);
  const int n = static_cast<int>(items.size());
  const int N = cfg.trial_size;
  if (n < N) throw error("simulate_trials: fewer items than trial_size");
  for (const Item& it : items)
    if (!it.latent.has_value())
      throw error("simulate_trials: item '" + it.id + "' carries no latent value");

  Rng rng(cfg.seed + 0x51ed2701ULL);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  std::vector<Trial> trials;
  auto emit = [&](const std::vector<int>& members) {
    Trial t;
    t.attribute = cfg.attribute;
    std::vector<double> scores(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      t.item_ids.push_back(items[static_cast<std::size_t>(members[k])].id);
      scores[k] = *items[static_cast<std::size_t>(members[k])].latent +
                  cfg.noise_sigma * rng.gaussian();
    }
    int best = 0, worst = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
      if (scores[k] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
      if (scores[k] < scores[static_cast<std::size_t>(worst)]) worst = static_cast<int>(k);
    }
    if (best == worst) worst = (best + 1) % static_cast<int>(scores.size());
    t.best = best;
    t.worst = worst;
    trials.push_back(std::move(t));
  };

  for (int pass = 0; pass < cfg.trials_per_item; ++pass) {
    rng.shuffle(order);
    int full = n / N;
    for (int g = 0; g < full; ++g)
      emit(std::vector<int>(order.begin() + static_cast<std::ptrdiff_t>(g) * N,
                            order.begin() + static_cast<std::ptrdiff_t>(g + 1) * N));
    int rem = n - full * N;
    if (rem > 0) {
      std::vector<int> extra(order.end() - rem, order.end());
      for (int k = 0; k < N - rem; ++k) extra.push_back(order[static_cast<std::size_t>(k)]);
      emit(extra);
    }
  }
  return trials;
}

}  // namespace bwsnet
