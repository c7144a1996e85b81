// Trial data model: relation derivation (count, grouping, order), dataset
// validation, and the trial-wise split.

#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "bwsnet/core.hpp"
#include "bwsnet/trial.hpp"

using bwsnet::DatasetSplit;
using bwsnet::Item;
using bwsnet::Relation;
using bwsnet::RelationKind;
using bwsnet::Trial;

namespace {

Trial make_trial(std::vector<std::string> ids, int best, int worst) {
  Trial t;
  t.attribute = "attr";
  t.item_ids = std::move(ids);
  t.best = best;
  t.worst = worst;
  return t;
}

std::vector<Item> make_items(int n) {
  std::vector<Item> items;
  for (int i = 0; i < n; ++i) {
    Item it;
    it.id = "it" + std::to_string(i);
    it.features = bwsnet::Mat(1, 1, static_cast<double>(i));
    items.push_back(it);
  }
  return items;
}

}  // namespace

TEST(DeriveRelations, CountIsTwoNMinusTwo) {
  for (int N : {3, 4, 5, 8}) {
    std::vector<std::string> ids;
    for (int i = 0; i < N; ++i) ids.push_back("x" + std::to_string(i));
    Trial t = make_trial(ids, 0, 1);
    EXPECT_EQ(bwsnet::derive_relations(t).size(), static_cast<std::size_t>(2 * (N - 2)));
  }
}

TEST(DeriveRelations, GroupedBestThenWorstInNeutralOrder) {
  // N=5: three best-anchored relations then three worst-anchored ones.
  Trial t = make_trial({"a", "b", "c", "d", "e"}, 1, 3);  // best=b, worst=d
  std::vector<Relation> rel = bwsnet::derive_relations(t, 7);
  ASSERT_EQ(rel.size(), 6u);
  // Neutrals in index order: a (0), c (2), e (4).
  const char* neutrals[3] = {"a", "c", "e"};
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(rel[i].far.first, "b");
    EXPECT_EQ(rel[i].far.second, "d");
    EXPECT_EQ(rel[i].near.first, "b");
    EXPECT_EQ(rel[i].near.second, neutrals[i]);
    EXPECT_EQ(rel[i].kind, RelationKind::best_neutral);
    EXPECT_EQ(rel[i].trial_index, 7);
  }
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(rel[3 + i].far.first, "b");
    EXPECT_EQ(rel[3 + i].far.second, "d");
    EXPECT_EQ(rel[3 + i].near.first, "d");
    EXPECT_EQ(rel[3 + i].near.second, neutrals[i]);
    EXPECT_EQ(rel[3 + i].kind, RelationKind::worst_neutral);
  }
}

TEST(DeriveRelations, RejectsMalformedTrials) {
  EXPECT_THROW((void)bwsnet::derive_relations(make_trial({"a", "b", "c"}, 0, 0)), bwsnet::error);
  EXPECT_THROW((void)bwsnet::derive_relations(make_trial({"a", "b", "c"}, 0, 3)), bwsnet::error);
  EXPECT_THROW((void)bwsnet::derive_relations(make_trial({"a", "b", "c"}, -1, 1)), bwsnet::error);
  EXPECT_THROW((void)bwsnet::derive_relations(make_trial({"a", "b"}, 0, 1)), bwsnet::error);
  EXPECT_THROW((void)bwsnet::derive_relations(make_trial({"a", "b", "a"}, 0, 1)), bwsnet::error);
}

TEST(TrialProblem, EmptyForValidTrial) {
  EXPECT_EQ(bwsnet::trial_problem(make_trial({"a", "b", "c", "d"}, 2, 0)), "");
  EXPECT_NE(bwsnet::trial_problem(make_trial({"a", "b", "c"}, 1, 1)), "");
}

TEST(ValidateDataset, FlagsAllIssueKinds) {
  std::vector<Item> items = make_items(3);
  items.push_back(items[0]);  // duplicate id it0
  std::vector<Trial> trials = {
      make_trial({"it0", "it1", "it2"}, 0, 1),       // fine
      make_trial({"it0", "ghost", "it2"}, 0, 1),     // dangling
      make_trial({"it0", "it1", "it2"}, 2, 2),       // invalid judgement
  };
  bwsnet::ValidationReport report = bwsnet::validate_dataset(items, trials);
  EXPECT_FALSE(report.ok());
  EXPECT_EQ(report.duplicate_ids.size(), 1u);
  EXPECT_EQ(report.dangling_references.size(), 1u);
  EXPECT_EQ(report.invalid_judgements.size(), 1u);
  EXPECT_EQ(report.issue_count(), 3u);

  bwsnet::ValidationReport clean = bwsnet::validate_dataset(make_items(3), {trials[0]});
  EXPECT_TRUE(clean.ok());
  EXPECT_EQ(clean.issue_count(), 0u);
}

TEST(SplitDataset, RejectsBadFractions) {
  std::vector<Item> items = make_items(10);
  std::vector<Trial> trials = {make_trial({"it0", "it1", "it2"}, 0, 1)};
  EXPECT_THROW((void)bwsnet::split_dataset(items, trials, 0.0, 0.8, 1), bwsnet::error);
  EXPECT_THROW((void)bwsnet::split_dataset(items, trials, 1.0, 0.8, 1), bwsnet::error);
  EXPECT_THROW((void)bwsnet::split_dataset(items, trials, 0.1, 0.0, 1), bwsnet::error);
  EXPECT_THROW((void)bwsnet::split_dataset(items, trials, 0.1, 1.0, 1), bwsnet::error);
}

TEST(SplitDataset, PartitionsAndEvalExactlyTouchesHeldOut) {
  const int n_items = 40;
  std::vector<Item> items = make_items(n_items);
  // Consecutive 4-tuples, cycling, 80 trials.
  std::vector<Trial> trials;
  for (int k = 0; k < 80; ++k) {
    std::vector<std::string> ids;
    for (int j = 0; j < 4; ++j) ids.push_back("it" + std::to_string((3 * k + j) % n_items));
    trials.push_back(make_trial(ids, 0, 1));
  }

  DatasetSplit split = bwsnet::split_dataset(items, trials, 0.1, 0.8, 5);

  // floor(0.1 * 40) = 4 held-out items.
  EXPECT_EQ(split.held_out_item_ids.size(), 4u);

  // Brute-force re-derivation: a trial is eval iff it touches a held-out id.
  auto touches = [&](const Trial& t) {
    for (const std::string& id : t.item_ids)
      if (split.held_out_item_ids.count(id)) return true;
    return false;
  };
  for (const Trial& t : split.eval_trials) EXPECT_TRUE(touches(t));
  for (const Trial& t : split.train_trials) EXPECT_FALSE(touches(t));
  for (const Trial& t : split.val_trials) EXPECT_FALSE(touches(t));

  // Size bookkeeping: retained = total - eval; train = floor(0.8 * retained).
  std::size_t retained = trials.size() - split.eval_trials.size();
  EXPECT_EQ(split.train_trials.size(), static_cast<std::size_t>(0.8 * static_cast<double>(retained)));
  EXPECT_EQ(split.train_trials.size() + split.val_trials.size(), retained);
  EXPECT_GT(split.eval_trials.size(), 0u);
  EXPECT_TRUE(split.warnings.empty());
}

TEST(SplitDataset, DeterministicAndSeedSensitive) {
  std::vector<Item> items = make_items(30);
  std::vector<Trial> trials;
  for (int k = 0; k < 60; ++k) {
    std::vector<std::string> ids;
    for (int j = 0; j < 3; ++j) ids.push_back("it" + std::to_string((2 * k + j) % 30));
    trials.push_back(make_trial(ids, 0, 1));
  }
  DatasetSplit a = bwsnet::split_dataset(items, trials, 0.1, 0.8, 3);
  DatasetSplit b = bwsnet::split_dataset(items, trials, 0.1, 0.8, 3);
  EXPECT_EQ(a.held_out_item_ids, b.held_out_item_ids);
  ASSERT_EQ(a.train_trials.size(), b.train_trials.size());
  for (std::size_t i = 0; i < a.train_trials.size(); ++i)
    EXPECT_EQ(a.train_trials[i].item_ids, b.train_trials[i].item_ids);

  DatasetSplit c = bwsnet::split_dataset(items, trials, 0.1, 0.8, 4);
  EXPECT_NE(a.held_out_item_ids, c.held_out_item_ids);
}

TEST(SplitDataset, WarnsWhenEvalEmpty) {
  // Held-out fraction small enough that floor(f*n) = 0: no eval trials.
  std::vector<Item> items = make_items(5);
  std::vector<Trial> trials;
  for (int k = 0; k < 10; ++k)
    trials.push_back(make_trial({"it0", "it1", "it2"}, 0, 1));
  DatasetSplit split = bwsnet::split_dataset(items, trials, 0.1, 0.8, 1);
  EXPECT_TRUE(split.eval_trials.empty());
  ASSERT_FALSE(split.warnings.empty());
}
