// Analysis utilities: counting scores, the two-component PCA projection
// (checked against an independent power-iteration eigensolver), Spearman
// rank correlation with ties, and the embedding-space CSV export.

#include <gtest/gtest.h>

#include <bwsnet/analysis.hpp>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "test_util.hpp"

using namespace bwsnet;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

Trial make_trial(std::vector<std::string> ids, int best, int worst) {
  Trial t;
  t.attribute = "attr";
  t.item_ids = std::move(ids);
  t.best = best;
  t.worst = worst;
  return t;
}

// --- Independent eigen oracle: power iteration with deflation. ---

std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& rows) {
  std::size_t n = rows.size(), d = rows[0].size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (double& m : mean) m /= static_cast<double>(n);
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
  for (auto& row : cov)
    for (double& x : row) x /= static_cast<double>(n - 1);
  return cov;
}

// Leading eigenpair of a symmetric matrix by plain power iteration.
std::pair<double, std::vector<double>> power_iterate(std::vector<std::vector<double>> a) {
  std::size_t d = a.size();
  std::vector<double> v(d, 0.0);
  // Deterministic, non-degenerate start.
  for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 / std::sqrt(static_cast<double>(i + 1));
  double lambda = 0.0;
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> w(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) w[i] += a[i][j] * v[j];
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return {0.0, v};
    for (double& x : w) x /= norm;
    double next = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double ai = 0.0;
      for (std::size_t j = 0; j < d; ++j) ai += a[i][j] * w[j];
      next += w[i] * ai;
    }
    double drift = 0.0;
    for (std::size_t i = 0; i < d; ++i) drift = std::max(drift, std::abs(w[i] - v[i]));
    v = std::move(w);
    bool settled = drift < 1e-14 && std::abs(next - lambda) < 1e-14;
    lambda = next;
    if (settled) break;
  }
  return {lambda, v};
}

void deflate(std::vector<std::vector<double>>& a, double lambda, const std::vector<double>& v) {
  std::size_t d = a.size();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a[i][j] -= lambda * v[i] * v[j];
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

TEST(CountScores, TalliesBestWorstAndAppearances) {
  // a: best twice, worst once in 3 appearances -> 1/3. b: best once in 2 ->
  // 1/2. c: worst twice in 2 -> -1. d: neutral only -> 0 of 2.
  std::vector<Trial> trials = {
      make_trial({"a", "b", "c"}, 0, 2),
      make_trial({"a", "c", "d"}, 0, 1),
      make_trial({"b", "a", "d"}, 0, 1),
  };
  std::vector<ItemScore> scores = count_scores(trials);
  ASSERT_EQ(scores.size(), 4u);

  // First-appearance order: a, b, c, d.
  EXPECT_EQ(scores[0].item_id, "a");
  EXPECT_EQ(scores[1].item_id, "b");
  EXPECT_EQ(scores[2].item_id, "c");
  EXPECT_EQ(scores[3].item_id, "d");

  EXPECT_EQ(scores[0].n_best, 2);
  EXPECT_EQ(scores[0].n_worst, 1);
  EXPECT_EQ(scores[0].n_appearances, 3);
  EXPECT_DOUBLE_EQ(scores[0].score, 1.0 / 3.0);

  EXPECT_EQ(scores[1].n_best, 1);
  EXPECT_EQ(scores[1].n_worst, 0);
  EXPECT_EQ(scores[1].n_appearances, 2);
  EXPECT_DOUBLE_EQ(scores[1].score, 0.5);

  EXPECT_EQ(scores[2].n_best, 0);
  EXPECT_EQ(scores[2].n_worst, 2);
  EXPECT_EQ(scores[2].n_appearances, 2);
  EXPECT_DOUBLE_EQ(scores[2].score, -1.0);

  EXPECT_EQ(scores[3].n_best, 0);
  EXPECT_EQ(scores[3].n_worst, 0);
  EXPECT_EQ(scores[3].n_appearances, 2);
  EXPECT_DOUBLE_EQ(scores[3].score, 0.0);
}

TEST(CountScores, AlwaysBestScoresOneAlwaysWorstScoresMinusOne) {
  std::vector<Trial> trials = {make_trial({"top", "mid", "low"}, 0, 2),
                               make_trial({"mid", "top", "low"}, 1, 2),
                               make_trial({"low", "mid", "top"}, 2, 0)};
  std::vector<ItemScore> scores = count_scores(trials);
  for (const ItemScore& s : scores) {
    if (s.item_id == "top") EXPECT_DOUBLE_EQ(s.score, 1.0);
    if (s.item_id == "low") EXPECT_DOUBLE_EQ(s.score, -1.0);
    if (s.item_id == "mid") EXPECT_DOUBLE_EQ(s.score, 0.0);
  }
}

TEST(CountScores, TrialOrderChangesRowOrderButNotValues) {
  std::vector<Trial> trials = {make_trial({"a", "b", "c"}, 0, 2),
                               make_trial({"c", "d", "a"}, 1, 0),
                               make_trial({"d", "b", "c"}, 0, 1)};
  std::vector<Trial> reversed(trials.rbegin(), trials.rend());

  std::map<std::string, ItemScore> fwd, rev;
  for (const ItemScore& s : count_scores(trials)) fwd[s.item_id] = s;
  for (const ItemScore& s : count_scores(reversed)) rev[s.item_id] = s;
  ASSERT_EQ(fwd.size(), rev.size());
  for (const auto& [id, s] : fwd) {
    EXPECT_EQ(s.n_best, rev[id].n_best) << id;
    EXPECT_EQ(s.n_worst, rev[id].n_worst) << id;
    EXPECT_EQ(s.n_appearances, rev[id].n_appearances) << id;
    EXPECT_TRUE(same_bits(s.score, rev[id].score)) << id;
  }
}

TEST(Pca, CollinearPointsLoadFullyOnTheFirstComponent) {
  // Points on the 3-D line t * (2, -1, 2) / 3: one informative direction.
  std::vector<std::vector<double>> rows;
  for (double t : {-3.0, -1.0, 0.0, 2.0, 5.0})
    rows.push_back({2.0 * t / 3.0, -t / 3.0, 2.0 * t / 3.0});

  PcaResult pca = pca_project(rows);
  EXPECT_NEAR(pca.explained_variance_fraction[0], 1.0, 1e-12);
  EXPECT_NEAR(pca.explained_variance_fraction[1], 0.0, 1e-12);
  for (const auto& c : pca.coords) EXPECT_NEAR(c[1], 0.0, 1e-9);

  // Projections preserve the spacing along the line (|t_i - mean t|).
  double mean_t = (-3.0 - 1.0 + 0.0 + 2.0 + 5.0) / 5.0;
  const double ts[] = {-3.0, -1.0, 0.0, 2.0, 5.0};
  for (std::size_t i = 0; i < rows.size(); ++i)
    EXPECT_NEAR(std::abs(pca.coords[i][0]), std::abs(ts[i] - mean_t), 1e-9) << i;
}

TEST(Pca, IdenticalPointsProjectToZero) {
  std::vector<std::vector<double>> rows(4, std::vector<double>{1.5, -2.0, 0.25});
  PcaResult pca = pca_project(rows);
  for (const auto& c : pca.coords) {
    EXPECT_EQ(c[0], 0.0);
    EXPECT_EQ(c[1], 0.0);
  }
  EXPECT_EQ(pca.explained_variance_fraction[0], 0.0);
  EXPECT_EQ(pca.explained_variance_fraction[1], 0.0);
}

TEST(Pca, DegenerateInputsYieldZeros) {
  EXPECT_TRUE(pca_project({}).coords.empty());

  PcaResult one = pca_project({{1.0, 2.0}});
  ASSERT_EQ(one.coords.size(), 1u);
  EXPECT_EQ(one.coords[0][0], 0.0);
  EXPECT_EQ(one.coords[0][1], 0.0);

  EXPECT_THROW(pca_project({{1.0, 2.0}, {1.0}}), error);
}

TEST(Pca, MatchesPowerIterationOracleOnARandomCloud) {
  // Anisotropic 4-D cloud; the oracle recomputes the top two eigenpairs with
  // power iteration + deflation, then projects the centered rows itself.
  Rng rng(12345);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 60; ++i) {
    double a = rng.gaussian() * 3.0;
    double b = rng.gaussian() * 1.2;
    double c = rng.gaussian() * 0.4;
    double d = rng.gaussian() * 0.1;
    rows.push_back({a + 0.5 * b, b - 0.25 * c, c + 0.1 * a, d});
  }

  PcaResult pca = pca_project(rows);

  std::vector<std::vector<double>> cov = covariance(rows);
  auto [l1, v1] = power_iterate(cov);
  deflate(cov, l1, v1);
  auto [l2, v2] = power_iterate(cov);

  double total = 0.0;
  for (std::size_t j = 0; j < 4; ++j) total += covariance(rows)[j][j];
  EXPECT_NEAR(pca.explained_variance_fraction[0], l1 / total, 1e-8);
  EXPECT_NEAR(pca.explained_variance_fraction[1], l2 / total, 1e-8);

  std::vector<double> mean(4, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < 4; ++j) mean[j] += r[j];
  for (double& m : mean) m /= static_cast<double>(rows.size());

  // Eigenvector signs are a free choice; align per column before comparing.
  for (int comp = 0; comp < 2; ++comp) {
    const std::vector<double>& v = (comp == 0) ? v1 : v2;
    double dot = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double proj = 0.0;
      for (std::size_t j = 0; j < 4; ++j) proj += (rows[i][j] - mean[j]) * v[j];
      dot += proj * pca.coords[i][comp];
    }
    double sign = (dot >= 0.0) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double proj = 0.0;
      for (std::size_t j = 0; j < 4; ++j) proj += (rows[i][j] - mean[j]) * v[j];
      EXPECT_NEAR(pca.coords[i][comp], sign * proj, 1e-8) << "row " << i << " comp " << comp;
    }
  }
}

TEST(Pca, SignConventionMakesLargestAxisEntryPositive) {
  // 2-D data dominated by the second coordinate with negative correlation to
  // the first; whatever the eigensolver returns, the published convention
  // (largest-|entry| coordinate positive) makes the projection deterministic.
  std::vector<std::vector<double>> rows;
  Rng rng(777);
  for (int i = 0; i < 40; ++i) {
    double t = rng.gaussian();
    rows.push_back({-0.3 * t + 0.01 * rng.gaussian(), 2.0 * t + 0.01 * rng.gaussian()});
  }
  PcaResult a = pca_project(rows);
  PcaResult b = pca_project(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_TRUE(same_bits(a.coords[i][0], b.coords[i][0]));
    EXPECT_TRUE(same_bits(a.coords[i][1], b.coords[i][1]));
  }
  // The dominant axis is ~(-0.148, 0.989): its largest entry (index 1) is
  // positive under the convention, so coords_x correlates positively with t.
  double corr = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) corr += rows[i][1] * a.coords[i][0];
  EXPECT_GT(corr, 0.0);
}

TEST(Spearman, PerfectAndReversedOrders) {
  std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> up = {10.0, 20.0, 30.0, 40.0, 50.0};
  std::vector<double> down = {5.0, 4.0, 3.0, 2.0, 1.0};
  EXPECT_DOUBLE_EQ(spearman(x, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
}

TEST(Spearman, InvariantUnderMonotoneTransforms) {
  Rng rng(91);
  std::vector<double> x(50);
  for (double& v : x) v = rng.uniform(-4.0, 4.0);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::exp(x[i]);  // strictly increasing
  EXPECT_DOUBLE_EQ(spearman(x, y), 1.0);
}

TEST(Spearman, TiesUseAverageRanks) {
  // x = {1, 2, 2, 3} has average ranks {1, 2.5, 2.5, 4}; against strictly
  // increasing y the closed form gives sqrt(0.9).
  std::vector<double> x = {1.0, 2.0, 2.0, 3.0};
  std::vector<double> y = {10.0, 20.0, 30.0, 40.0};
  EXPECT_NEAR(spearman(x, y), std::sqrt(0.9), 1e-12);
}

TEST(Spearman, ConstantInputGivesZero) {
  std::vector<double> x = {2.0, 2.0, 2.0, 2.0};
  std::vector<double> y = {1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(spearman(x, y), 0.0);
}

TEST(Spearman, RejectsMismatchedOrTinyInputs) {
  EXPECT_THROW(spearman({1.0, 2.0}, {1.0}), error);
  EXPECT_THROW(spearman({1.0}, {2.0}), error);
}

TEST(ExportSpace, HeaderOnlyForZeroItems) {
  std::filesystem::path dir = testutil::temp_dir("space_empty");
  std::string path = (dir / "space.csv").string();
  export_space({}, 3, path);
  EXPECT_EQ(testutil::slurp(path), "item_id,e0,e1,e2,pca_x,pca_y,score,attribute\n");
}

TEST(ExportSpace, RowsCarrySevenPlusDFieldsAndRoundTripBitExact) {
  std::filesystem::path dir = testutil::temp_dir("space_rows");
  std::string path = (dir / "space.csv").string();

  std::vector<SpaceRow> rows(2);
  rows[0].item_id = "item_0000";
  rows[0].embedding = {0.1, -1.0 / 3.0};
  rows[0].pca_x = 0.25;
  rows[0].pca_y = -0.125;
  rows[0].score = 2.0 / 3.0;
  rows[0].attribute = "bright";
  rows[1].item_id = "item_0001";
  rows[1].embedding = {1e-300, 3.141592653589793};
  rows[1].pca_x = -1.5;
  rows[1].pca_y = 0.0;
  rows[1].score = -1.0;
  rows[1].attribute = "bright";

  export_space(rows, 2, path);

  std::ifstream in(path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "item_id,e0,e1,pca_x,pca_y,score,attribute");
  for (int r = 0; r < 2; ++r) {
    ASSERT_TRUE(std::getline(in, line));
    std::vector<std::string> f = split_csv_line(line);
    ASSERT_EQ(f.size(), 7u);
    EXPECT_EQ(f[0], rows[static_cast<std::size_t>(r)].item_id);
    EXPECT_TRUE(same_bits(std::strtod(f[1].c_str(), nullptr),
                          rows[static_cast<std::size_t>(r)].embedding[0]));
    EXPECT_TRUE(same_bits(std::strtod(f[2].c_str(), nullptr),
                          rows[static_cast<std::size_t>(r)].embedding[1]));
    EXPECT_TRUE(same_bits(std::strtod(f[3].c_str(), nullptr),
                          rows[static_cast<std::size_t>(r)].pca_x));
    EXPECT_TRUE(same_bits(std::strtod(f[4].c_str(), nullptr),
                          rows[static_cast<std::size_t>(r)].pca_y));
    EXPECT_TRUE(same_bits(std::strtod(f[5].c_str(), nullptr),
                          rows[static_cast<std::size_t>(r)].score));
    EXPECT_EQ(f[6], rows[static_cast<std::size_t>(r)].attribute);
  }
  EXPECT_FALSE(std::getline(in, line));
}

TEST(ExportSpace, RejectsDimensionMismatch) {
  std::filesystem::path dir = testutil::temp_dir("space_bad");
  std::vector<SpaceRow> rows(1);
  rows[0].item_id = "x";
  rows[0].embedding = {1.0, 2.0, 3.0};
  EXPECT_THROW(export_space(rows, 2, (dir / "space.csv").string()), error);
}

TEST(ExportSpace, RewritesAreByteIdentical) {
  std::filesystem::path dir = testutil::temp_dir("space_det");
  std::vector<SpaceRow> rows(1);
  rows[0].item_id = "x";
  rows[0].embedding = {0.1, 0.2};
  rows[0].pca_x = 0.3;
  rows[0].pca_y = 0.4;
  rows[0].score = 0.5;
  rows[0].attribute = "a";
  std::string p1 = (dir / "one.csv").string();
  std::string p2 = (dir / "two.csv").string();
  export_space(rows, 2, p1);
  export_space(rows, 2, p2);
  EXPECT_EQ(testutil::slurp(p1), testutil::slurp(p2));
}
