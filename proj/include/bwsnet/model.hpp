#pragma once
// Embedding encoder f: features -> h in R^d (temporal mean-pool, then a
// tanh feedforward stack with a linear head) and the margin network M
// producing per-relation margins alpha = mu + delta * tanh(r) in
// (mu - delta, mu + delta).

#include <cstdint>
#include <string>
#include <vector>

#include "bwsnet/autodiff.hpp"
#include "bwsnet/core.hpp"
#include "bwsnet/trial.hpp"

namespace bwsnet {

struct EncoderConfig {
  int feature_dim = 0;  // set from the data when 0
  std::vector<int> hidden_dims = {32, 32};
  int d = 32;
  std::uint64_t seed = 1;
};

struct MarginConfig {
  double mu = 1.0;
  double delta = 1.0;
  std::vector<int> hidden_dims = {16};
};

// Per-trial margins, one per inequality: alpha_b[i] for the best-anchored
// relation of neutral i, alpha_w[i] for the worst-anchored one.
struct MarginSet {
  std::vector<double> alpha_b;
  std::vector<double> alpha_w;
};

inline void validate(const EncoderConfig& cfg) {
  if (cfg.feature_dim < 1) throw error("encoder config: feature_dim must be >= 1");
  if (cfg.d < 1) throw error("encoder config: d must be >= 1");
  for (int h : cfg.hidden_dims)
    if (h < 1) throw error("encoder config: hidden dims must be >= 1");
}

inline void validate(const MarginConfig& cfg) {
  if (!(cfg.mu > 0.0)) throw error("margin config: mu must be positive");
  if (cfg.delta < 0.0 || cfg.delta > cfg.mu)
    throw error("margin config: delta must lie in [0, mu] to keep margins positive");
  for (int h : cfg.hidden_dims)
    if (h < 1) throw error("margin config: hidden dims must be >= 1");
}

namespace detail {

inline void add_glorot_layer(ParameterSet& ps, const std::string& name, int fan_out, int fan_in,
                             Rng& rng) {
  ps.add(name + ".w", fan_out, fan_in);
  ps.add(name + ".b", fan_out, 1);
  double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& x : ps.tensors[ps.tensors.size() - 2].data) x = rng.uniform(-a, a);
}

// Layer dimensions reconstructed from tensor names/shapes, so encode and
// margin passes need only a ParameterSet.
inline std::vector<int> layer_indices(const ParameterSet& ps, const std::string& prefix) {
  std::vector<int> idx;
  for (int layer = 0;; ++layer) {
    int wi = ps.index_of(prefix + std::to_string(layer) + ".w");
    if (wi < 0) break;
    idx.push_back(wi);
  }
  if (idx.empty()) throw error("ParameterSet carries no '" + prefix + "*' layers");
  return idx;
}

}  // namespace detail

// Seeded Glorot-uniform weights (a = sqrt(6/(fan_in+fan_out))), zero
// biases. Encoder layers first (enc0..encK), then margin layers (mnet0..).
inline ParameterSet init_params(const EncoderConfig& enc, const MarginConfig& margin) {
  validate(enc);
  validate(margin);
  Rng rng(enc.seed);
  ParameterSet ps;

  std::vector<int> dims;
  dims.push_back(enc.feature_dim);
  for (int h : enc.hidden_dims) dims.push_back(h);
  dims.push_back(enc.d);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    detail::add_glorot_layer(ps, "enc" + std::to_string(l), dims[l + 1], dims[l], rng);

  std::vector<int> mdims;
  mdims.push_back(3 * enc.d);
  for (int h : margin.hidden_dims) mdims.push_back(h);
  mdims.push_back(1);
  for (std::size_t l = 0; l + 1 < mdims.size(); ++l)
    detail::add_glorot_layer(ps, "mnet" + std::to_string(l), mdims[l + 1], mdims[l], rng);

  return ps;
}

// --- Plain (double) forward passes, used for evaluation and analysis. ---

inline std::vector<double> mlp_forward(const ParameterSet& ps, const std::string& prefix,
                                       const std::vector<double>& input) {
  std::vector<int> layers = detail::layer_indices(ps, prefix);
  std::vector<double> x = input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = ps.tensors[static_cast<std::size_t>(layers[l])];
    const auto& b = ps.at(w.name.substr(0, w.name.size() - 2) + ".b");
    if (static_cast<int>(x.size()) != w.cols)
      throw error("mlp_forward: input width " + std::to_string(x.size()) +
                  " does not match layer '" + w.name + "' fan-in " + std::to_string(w.cols));
    // Bias is added after the product sum, matching the tape route's
    // add(matmul(w, x), b) association bit-for-bit.
    std::vector<double> y(static_cast<std::size_t>(w.rows), 0.0);
    for (int r = 0; r < w.rows; ++r) {
      double acc = 0.0;
      for (int c = 0; c < w.cols; ++c)
        acc += w.data[static_cast<std::size_t>(r) * w.cols + c] * x[static_cast<std::size_t>(c)];
      y[static_cast<std::size_t>(r)] = acc + b.data[static_cast<std::size_t>(r)];
    }
    bool last = (l + 1 == layers.size());
    if (!last)
      for (double& v : y) v = std::tanh(v);
    x = std::move(y);
  }
  return x;
}

// Temporal mean-pool, then the feedforward stack.
inline std::vector<double> encode(const ParameterSet& ps, const Mat& features) {
  return mlp_forward(ps, "enc", mean_pool(features));
}

inline std::vector<double> encode_pooled(const ParameterSet& ps,
                                         const std::vector<double>& pooled) {
  return mlp_forward(ps, "enc", pooled);
}

// Margin for one relation; anchor-first input ordering [h_anchor, h_other,
// h_neutral], so the two relations of a neutral can carry distinct margins.
inline double margin_plain(const ParameterSet& ps, const MarginConfig& cfg,
                           const std::vector<double>& h_anchor, const std::vector<double>& h_other,
                           const std::vector<double>& h_neutral) {
  std::vector<double> input;
  input.reserve(h_anchor.size() * 3);
  input.insert(input.end(), h_anchor.begin(), h_anchor.end());
  input.insert(input.end(), h_other.begin(), h_other.end());
  input.insert(input.end(), h_neutral.begin(), h_neutral.end());
  double raw = mlp_forward(ps, "mnet", input)[0];
  return cfg.mu + cfg.delta * std::tanh(raw);
}

// Margins for every relation of a trial whose embeddings are given row-wise
// (N x d). Best-anchored margins first, then worst-anchored, matching the
// relation emission order of derive_relations.
inline MarginSet margins(const ParameterSet& ps, const MarginConfig& cfg, const Mat& embeddings,
                         int best, int worst) {
  validate(cfg);
  if (embeddings.rows < 3) throw error("margins: need at least 3 embeddings");
  auto row = [&](int r) {
    return std::vector<double>(embeddings.a.begin() + static_cast<std::ptrdiff_t>(r) * embeddings.cols,
                               embeddings.a.begin() + static_cast<std::ptrdiff_t>(r + 1) * embeddings.cols);
  };
  std::vector<double> h_b = row(best);
  std::vector<double> h_w = row(worst);
  MarginSet set;
  for (int i = 0; i < embeddings.rows; ++i) {
    if (i == best || i == worst) continue;
    set.alpha_b.push_back(margin_plain(ps, cfg, h_b, h_w, row(i)));
  }
  for (int i = 0; i < embeddings.rows; ++i) {
    if (i == best || i == worst) continue;
    set.alpha_w.push_back(margin_plain(ps, cfg, h_w, h_b, row(i)));
  }
  return set;
}

// --- Tape builders, used during training. ---

// Cached parameter-node ids so one tape references each tensor once.
struct TapeWiring {
  std::vector<int> enc_w, enc_b, mnet_w, mnet_b;

  static TapeWiring build(Tape& tape, const ParameterSet& ps) {
    TapeWiring w;
    for (int layer = 0;; ++layer) {
      int wi = ps.index_of("enc" + std::to_string(layer) + ".w");
      if (wi < 0) break;
      w.enc_w.push_back(tape.param(wi));
      w.enc_b.push_back(tape.param("enc" + std::to_string(layer) + ".b"));
    }
    for (int layer = 0;; ++layer) {
      int wi = ps.index_of("mnet" + std::to_string(layer) + ".w");
      if (wi < 0) break;
      w.mnet_w.push_back(tape.param(wi));
      w.mnet_b.push_back(tape.param("mnet" + std::to_string(layer) + ".b"));
    }
    if (w.enc_w.empty()) throw error("TapeWiring: ParameterSet carries no encoder layers");
    return w;
  }
};

inline int mlp_on_tape(Tape& tape, const std::vector<int>& weights, const std::vector<int>& biases,
                       int input) {
  int x = input;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    x = tape.add(tape.matmul(weights[l], x), biases[l]);
    if (l + 1 < weights.size()) x = tape.tanh(x);
  }
  return x;
}

inline int encode_on_tape(Tape& tape, const TapeWiring& wiring, const std::vector<double>& pooled,
                          const std::string& label = "") {
  int input = tape.constant(pooled, static_cast<int>(pooled.size()), 1, label);
  return mlp_on_tape(tape, wiring.enc_w, wiring.enc_b, input);
}

// alpha = mu + delta * tanh(raw); delta = 0 collapses to exactly mu.
inline int margin_on_tape(Tape& tape, const TapeWiring& wiring, const MarginConfig& cfg,
                          int h_anchor, int h_other, int h_neutral) {
  int input = tape.concat(tape.concat(h_anchor, h_other), h_neutral);
  int raw = mlp_on_tape(tape, wiring.mnet_w, wiring.mnet_b, input);
  return tape.add(tape.scalar(cfg.mu), tape.scale(tape.tanh(raw), cfg.delta));
}

}  // namespace bwsnet
