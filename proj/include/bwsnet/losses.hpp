#pragma once
// Trial-wise losses: the fixed-margin RC hinge loss, its dynamic-margin
// variant (Dm-RC), the Dynamic Margin Constraint penalty, the
// fulfilled-relation (FR) loss in hard and smooth modes, and their weighted
// composition. Plain double versions serve evaluation and tests; tape
// builders serve training. Both routes share one association order,
// relu((d_near - d_far) + alpha), summed best-anchored group first.

#include <cmath>
#include <vector>

#include "bwsnet/autodiff.hpp"
#include "bwsnet/core.hpp"
#include "bwsnet/model.hpp"

namespace bwsnet {

enum class FrMode { smooth, hard };
enum class MarginMode { learned, fixed };
enum class GammaKind { relu_neg, zero };  // relu_neg: gamma(x) = relu(-x)

struct LossBreakdown {
  double dmrc = 0.0;
  double dmc = 0.0;
  double fr = 0.0;
  double total = 0.0;
  int n_v = 0;
};

namespace detail {

inline std::vector<double> emb_row(const Mat& embeddings, int r) {
  return std::vector<double>(
      embeddings.a.begin() + static_cast<std::ptrdiff_t>(r) * embeddings.cols,
      embeddings.a.begin() + static_cast<std::ptrdiff_t>(r + 1) * embeddings.cols);
}

// Grouped violation terms (d_near - d_far) + alpha: best-anchored
// relations first (in neutral order), then worst-anchored.
inline std::vector<double> violations(const Mat& embeddings, int best, int worst,
                                      const MarginSet& margins) {
  std::vector<double> h_b = emb_row(embeddings, best);
  std::vector<double> h_w = emb_row(embeddings, worst);
  double d_far = euclidean(h_b, h_w);
  std::vector<double> out;
  std::size_t k = 0;
  for (int i = 0; i < embeddings.rows; ++i) {
    if (i == best || i == worst) continue;
    out.push_back((euclidean(h_b, emb_row(embeddings, i)) - d_far) + margins.alpha_b[k]);
    ++k;
  }
  k = 0;
  for (int i = 0; i < embeddings.rows; ++i) {
    if (i == best || i == worst) continue;
    out.push_back((euclidean(h_w, emb_row(embeddings, i)) - d_far) + margins.alpha_w[k]);
    ++k;
  }
  return out;
}

inline MarginSet constant_margins(int n_neutrals, double alpha) {
  MarginSet set;
  set.alpha_b.assign(static_cast<std::size_t>(n_neutrals), alpha);
  set.alpha_w.assign(static_cast<std::size_t>(n_neutrals), alpha);
  return set;
}

}  // namespace detail

// Number of relations whose hinge term is strictly positive (the margin-
// inclusive training count; ties at the margin count as fulfilled).
inline int count_unfulfilled(const Mat& embeddings, int best, int worst,
                             const MarginSet& margins) {
  int n_v = 0;
  for (double v : detail::violations(embeddings, best, worst, margins))
    if (v > 0.0) ++n_v;
  return n_v;
}

inline int count_unfulfilled(const Mat& embeddings, int best, int worst, double alpha) {
  return count_unfulfilled(embeddings, best, worst,
                           detail::constant_margins(embeddings.rows - 2, alpha));
}

// Fixed-margin hinge loss: sum of active hinges divided by their count
// (defined as 0 when every relation is fulfilled).
inline double rc_loss(const Mat& embeddings, int best, int worst, double alpha) {
  MarginSet margins = detail::constant_margins(embeddings.rows - 2, alpha);
  std::vector<double> v = detail::violations(embeddings, best, worst, margins);
  int n_v = 0;
  double acc = 0.0;
  for (double x : v) {
    if (x > 0.0) ++n_v;
    acc += (x > 0.0 ? x : 0.0);
  }
  if (n_v == 0) return 0.0;
  return acc * (1.0 / n_v);
}

// Dynamic-margin variant: per-relation margins, same structure otherwise.
inline double dmrc_loss(const Mat& embeddings, int best, int worst, const MarginSet& margins) {
  std::vector<double> v = detail::violations(embeddings, best, worst, margins);
  int n_v = 0;
  double acc = 0.0;
  for (double x : v) {
    if (x > 0.0) ++n_v;
    acc += (x > 0.0 ? x : 0.0);
  }
  if (n_v == 0) return 0.0;
  return acc * (1.0 / n_v);
}

inline double apply_gamma(GammaKind gamma, double x) {
  switch (gamma) {
    case GammaKind::relu_neg: return -x > 0.0 ? -x : 0.0;
    case GammaKind::zero: return 0.0;
  }
  return 0.0;
}

// Sum of gamma(alpha - mu) over all margins; with the default gamma this
// penalizes margins below mu.
inline double dmc_loss(const MarginSet& margins, double mu, GammaKind gamma = GammaKind::relu_neg) {
  double acc = 0.0;
  for (double a : margins.alpha_b) acc += apply_gamma(gamma, a - mu);
  for (double a : margins.alpha_w) acc += apply_gamma(gamma, a - mu);
  return acc;
}

// Unfulfilled-relation fraction n_v / N (hard), or its sigmoid surrogate
// (1/N) * sum sigmoid(violation / temperature) that converges to the hard
// value as temperature -> 0.
inline double fr_loss(const Mat& embeddings, int best, int worst, const MarginSet& margins,
                      FrMode mode, double temperature = 0.1) {
  int N = embeddings.rows;
  if (mode == FrMode::hard) {
    return count_unfulfilled(embeddings, best, worst, margins) / static_cast<double>(N);
  }
  if (!(temperature > 0.0)) throw error("fr_loss: smooth mode needs temperature > 0");
  double inv2t = 1.0 / (2.0 * temperature);
  double acc = 0.0;
  for (double v : detail::violations(embeddings, best, worst, margins))
    acc += 0.5 * (1.0 + std::tanh(v * inv2t));
  return acc * (1.0 / N);
}

struct GlobalLossConfig {
  double lambda_dmc = 1.0;
  double lambda_fr = 1.0;
  double mu = 1.0;
  GammaKind gamma = GammaKind::relu_neg;
  FrMode fr_mode = FrMode::smooth;
  double temperature = 0.1;
};

// total = dmrc + lambda_dmc * dmc + lambda_fr * fr.
inline LossBreakdown global_loss(const Mat& embeddings, int best, int worst,
                                 const MarginSet& margins, const GlobalLossConfig& cfg) {
  LossBreakdown out;
  out.dmrc = dmrc_loss(embeddings, best, worst, margins);
  out.dmc = dmc_loss(margins, cfg.mu, cfg.gamma);
  out.fr = fr_loss(embeddings, best, worst, margins, cfg.fr_mode, cfg.temperature);
  out.n_v = count_unfulfilled(embeddings, best, worst, margins);
  out.total = (out.dmrc + cfg.lambda_dmc * out.dmc) + cfg.lambda_fr * out.fr;
  return out;
}

// --- Tape builders. ---

struct TrialLossConfig {
  double mu = 1.0;
  double delta = 1.0;
  double lambda_dmc = 1.0;
  double lambda_fr = 1.0;
  MarginMode margin_mode = MarginMode::learned;
  GammaKind gamma = GammaKind::relu_neg;
  FrMode fr_mode = FrMode::smooth;
  double temperature = 0.1;
};

struct TrialLossNodes {
  int total = -1;
  int dmrc = -1;
  int dmc = -1;
  int fr = -1;
  int n_v = 0;
  double fr_hard = 0.0;
  std::vector<double> margin_values;  // grouped: best-anchored, then worst-
};

inline int distance_on_tape(Tape& tape, int a, int b) {
  int diff = tape.sub(a, b);
  return tape.sqrt(tape.sum(tape.mul(diff, diff)));
}

// Builds the full per-trial loss. embeddings are node ids of the N item
// embeddings in trial order. The fixed-margin path never touches the margin
// network; the learned path with delta = 0 reproduces it bit-for-bit.
inline TrialLossNodes trial_loss_on_tape(Tape& tape, const TapeWiring& wiring,
                                         const TrialLossConfig& cfg,
                                         const std::vector<int>& embeddings, int best, int worst) {
  int N = static_cast<int>(embeddings.size());
  if (N < 3) throw error("trial_loss_on_tape: need at least 3 embeddings");
  int h_b = embeddings[static_cast<std::size_t>(best)];
  int h_w = embeddings[static_cast<std::size_t>(worst)];
  int d_far = distance_on_tape(tape, h_b, h_w);

  MarginConfig margin_cfg;
  margin_cfg.mu = cfg.mu;
  margin_cfg.delta = cfg.delta;

  // Per-relation margin nodes, grouped best-anchored then worst-anchored.
  std::vector<int> alpha;
  TrialLossNodes out;
  if (cfg.margin_mode == MarginMode::learned) {
    for (int i = 0; i < N; ++i) {
      if (i == best || i == worst) continue;
      alpha.push_back(margin_on_tape(tape, wiring, margin_cfg, h_b, h_w,
                                     embeddings[static_cast<std::size_t>(i)]));
    }
    for (int i = 0; i < N; ++i) {
      if (i == best || i == worst) continue;
      alpha.push_back(margin_on_tape(tape, wiring, margin_cfg, h_w, h_b,
                                     embeddings[static_cast<std::size_t>(i)]));
    }
  } else {
    int alpha_const = tape.scalar(cfg.mu, "fixed-margin");
    alpha.assign(static_cast<std::size_t>(2 * (N - 2)), alpha_const);
  }
  for (int a : alpha) out.margin_values.push_back(tape.value(a));

  // Violations (d_near - d_far) + alpha, same grouping.
  std::vector<int> violations;
  std::size_t k = 0;
  for (int i = 0; i < N; ++i) {
    if (i == best || i == worst) continue;
    int d_near = distance_on_tape(tape, h_b, embeddings[static_cast<std::size_t>(i)]);
    violations.push_back(tape.add(tape.sub(d_near, d_far), alpha[k++]));
  }
  for (int i = 0; i < N; ++i) {
    if (i == best || i == worst) continue;
    int d_near = distance_on_tape(tape, h_w, embeddings[static_cast<std::size_t>(i)]);
    violations.push_back(tape.add(tape.sub(d_near, d_far), alpha[k++]));
  }

  std::vector<int> hinges;
  hinges.reserve(violations.size());
  int hinge_sum = -1;
  for (int v : violations) {
    int h = tape.relu(v);
    hinges.push_back(h);
    hinge_sum = (hinge_sum < 0) ? h : tape.add(hinge_sum, h);
  }

  int n_v = 0;
  for (int h : hinges)
    if (tape.value(h) > 0.0) ++n_v;
  out.n_v = n_v;
  out.fr_hard = n_v / static_cast<double>(N);

  // The count n_v is treated as a constant of the differentiation.
  out.dmrc = (n_v == 0) ? tape.scalar(0.0) : tape.scale(hinge_sum, 1.0 / n_v);

  if (cfg.margin_mode == MarginMode::learned && cfg.gamma == GammaKind::relu_neg) {
    int mu_const = tape.scalar(cfg.mu);
    int dmc_sum = -1;
    for (int a : alpha) {
      int term = tape.relu(tape.sub(mu_const, a));
      dmc_sum = (dmc_sum < 0) ? term : tape.add(dmc_sum, term);
    }
    out.dmc = dmc_sum;
  } else {
    out.dmc = tape.scalar(0.0);
  }

  if (cfg.fr_mode == FrMode::smooth) {
    if (!(cfg.temperature > 0.0))
      throw error("trial_loss_on_tape: smooth FR mode needs temperature > 0");
    double inv2t = 1.0 / (2.0 * cfg.temperature);
    int one = tape.scalar(1.0);
    int fr_sum = -1;
    for (int v : violations) {
      int s = tape.scale(tape.add(one, tape.tanh(tape.scale(v, inv2t))), 0.5);
      fr_sum = (fr_sum < 0) ? s : tape.add(fr_sum, s);
    }
    out.fr = tape.scale(fr_sum, 1.0 / N);
  } else {
    out.fr = tape.scalar(out.fr_hard);
  }

  out.total = tape.add(tape.add(out.dmrc, tape.scale(out.dmc, cfg.lambda_dmc)),
                       tape.scale(out.fr, cfg.lambda_fr));
  return out;
}

}  // namespace bwsnet
