#pragma once
// Post-hoc analysis: per-item best-worst counting scores, a 2-D PCA
// projection of the learned embedding space (cyclic Jacobi eigensolver,
// deterministic sign convention), Spearman rank correlation, and a CSV
// export of the embedding space.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "bwsnet/core.hpp"
#include "bwsnet/trial.hpp"

namespace bwsnet {

struct ItemScore {
  std::string item_id;
  double score = 0.0;  // (n_best - n_worst) / n_appearances
  long n_best = 0;
  long n_worst = 0;
  long n_appearances = 0;
};

// Counting scores in first-appearance order; items never seen get no entry.
inline std::vector<ItemScore> count_scores(const std::vector<Trial>& trials) {
  std::vector<std::string> order;
  std::map<std::string, ItemScore> by_id;
  for (const Trial& t : trials) {
    for (std::size_t i = 0; i < t.item_ids.size(); ++i) {
      const std::string& id = t.item_ids[i];
      if (!by_id.count(id)) {
        order.push_back(id);
        by_id[id].item_id = id;
      }
      ItemScore& s = by_id[id];
      ++s.n_appearances;
      if (static_cast<int>(i) == t.best) ++s.n_best;
      if (static_cast<int>(i) == t.worst) ++s.n_worst;
    }
  }
  std::vector<ItemScore> out;
  out.reserve(order.size());
  for (const std::string& id : order) {
    ItemScore s = by_id[id];
    s.score = static_cast<double>(s.n_best - s.n_worst) / static_cast<double>(s.n_appearances);
    out.push_back(s);
  }
  return out;
}

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix.  Returns
// eigenvalues (diagonal of the rotated matrix) and eigenvectors as columns
// of V.  Deterministic: fixed sweep order, convergence on off-diagonal norm.
inline void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& eigenvalues,
                         std::vector<std::vector<double>>& eigenvectors) {
  std::size_t n = a.size();
  eigenvectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) eigenvectors[i][i] = 1.0;
  if (n == 0) {
    eigenvalues.clear();
    return;
  }

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-24) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a[p][q];
        if (std::fabs(apq) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = eigenvectors[k][p], vkq = eigenvectors[k][q];
          eigenvectors[k][p] = c * vkp - s * vkq;
          eigenvectors[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  eigenvalues.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a[i][i];
}

}  // namespace detail

struct PcaResult {
  // One (x, y) pair per input row, projection onto the top two principal
  // components; second column is zero when fewer than two informative
  // directions exist.
  std::vector<std::array<double, 2>> coords;
  std::array<double, 2> explained_variance_fraction = {0.0, 0.0};
};

// PCA of row vectors.  Sign convention: each principal axis is flipped so
// its largest-magnitude coordinate is positive (earliest index on ties).
inline PcaResult pca_project(const std::vector<std::vector<double>>& rows) {
  PcaResult result;
  if (rows.empty()) return result;
  std::size_t n = rows.size();
  std::size_t d = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != d) throw error("pca_project: rows must share one dimension");
  result.coords.assign(n, {0.0, 0.0});
  if (d == 0 || n < 2) return result;

  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);

  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov[i][j] /= static_cast<double>(n - 1);
      cov[j][i] = cov[i][j];
    }

  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenvectors;
  detail::jacobi_eigen(cov, eigenvalues, eigenvectors);

  std::vector<std::size_t> idx(d);
  for (std::size_t i = 0; i < d; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return eigenvalues[a] > eigenvalues[b]; });

  double total_var = 0.0;
  for (double v : eigenvalues) total_var += std::max(v, 0.0);

  for (int comp = 0; comp < 2 && comp < static_cast<int>(d); ++comp) {
    std::size_t col = idx[static_cast<std::size_t>(comp)];
    double ev = std::max(eigenvalues[col], 0.0);
    if (ev <= 0.0) continue;  // no informative direction: leave zeros
    std::vector<double> axis(d);
    for (std::size_t j = 0; j < d; ++j) axis[j] = eigenvectors[j][col];
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::fabs(axis[j]) > std::fabs(axis[arg])) arg = j;
    if (axis[arg] < 0.0)
      for (double& v : axis) v = -v;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += (rows[i][j] - mean[j]) * axis[j];
      result.coords[i][static_cast<std::size_t>(comp)] = dot;
    }
    if (total_var > 0.0)
      result.explained_variance_fraction[static_cast<std::size_t>(comp)] = ev / total_var;
  }
  return result;
}

namespace detail {

// Average ranks (1-based, ties get the mean of the ranks they span).
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

// Spearman rank correlation (average ranks on ties, then Pearson on ranks).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw error("spearman: length mismatch");
  if (x.size() < 2) throw error("spearman: need at least two points");
  return detail::pearson(detail::average_ranks(x), detail::average_ranks(y));
}

struct SpaceRow {
  std::string item_id;
  std::vector<double> embedding;
  double pca_x = 0.0, pca_y = 0.0;
  double score = 0.0;
  std::string attribute;
};

// CSV export of the embedding space: header
// item_id,e0,...,e{d-1},pca_x,pca_y,score,attribute then one row per item.
inline void export_space(const std::vector<SpaceRow>& rows, int d, const std::string& path) {
  for (const SpaceRow& r : rows)
    if (static_cast<int>(r.embedding.size()) != d)
      throw error("export_space: embedding dimension mismatch for item '" + r.item_id + "'");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("export_space: cannot open '" + path + "' for writing");
  out << "item_id";
  for (int j = 0; j < d; ++j) out << ",e" << j;
  out << ",pca_x,pca_y,score,attribute\n";
  for (const SpaceRow& r : rows) {
    out << r.item_id;
    for (int j = 0; j < d; ++j) out << "," << fmt_g17(r.embedding[static_cast<std::size_t>(j)]);
    out << "," << fmt_g17(r.pca_x) << "," << fmt_g17(r.pca_y) << "," << fmt_g17(r.score) << ","
        << r.attribute << "\n";
  }
  if (!out) throw error("export_space: write failed for '" + path + "'");
}

}  // namespace bwsnet
