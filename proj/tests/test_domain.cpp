#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "appa/domain.hpp"
#include "appa/rng.hpp"
#include "oracles.hpp"

using namespace appa;

TEST_CASE("ProbDistribution validates entries and sum") {
  CHECK_NOTHROW(ProbDistribution::validated({0.25, 0.75}));
  CHECK_THROWS_AS(ProbDistribution::validated({0.3, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(ProbDistribution::validated({1.2, -0.2}), std::invalid_argument);
  CHECK_THROWS_AS(ProbDistribution::validated({1.0}), std::invalid_argument);
  // within tolerance 1e-6
  CHECK_NOTHROW(ProbDistribution::validated({0.5 + 4e-7, 0.5}));
  CHECK_THROWS_AS(ProbDistribution::validated({0.5 + 2e-6, 0.5}), std::invalid_argument);
}

TEST_CASE("renormalized divides by the sum and rejects tiny mass") {
  const auto d = ProbDistribution::renormalized({2.0, 6.0});
  CHECK(d[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(ProbDistribution::renormalized({0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(ProbDistribution::renormalized({-1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("renormalize round-trips scaled distributions") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const size_t k = 2 + rng.below(7);
    const auto p = oracle::random_distribution(rng, k);
    const double c = std::exp(rng.uniform(-10.0, 6.0));  // spans tiny to large scales
    if (c <= kMinRenormalizableSum) continue;
    std::vector<double> scaled(p);
    for (double& v : scaled) v *= c;
    const auto back = ProbDistribution::renormalized(scaled);
    for (size_t j = 0; j < k; ++j) CHECK(back[j] == doctest::Approx(p[j]).epsilon(1e-9));
  }
}

TEST_CASE("Ranking validates permutations") {
  CHECK_NOTHROW(Ranking::validated({2, 0, 1}));
  CHECK_THROWS_AS(Ranking::validated({0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(Ranking::validated({0, 1, 3}), std::invalid_argument);
}

TEST_CASE("ranking_from_distribution sorts by descending probability") {
  const auto r1 = ranking_from_distribution(ProbDistribution::validated({0.1, 0.7, 0.2}));
  CHECK(r1.order() == std::vector<int>{1, 2, 0});
  // ties break by ascending option index
  const auto r2 = ranking_from_distribution(ProbDistribution::validated({0.5, 0.5}));
  CHECK(r2.order() == std::vector<int>{0, 1});
  const auto r3 = ranking_from_distribution(ProbDistribution::validated({0.25, 0.25, 0.25, 0.25}));
  CHECK(r3.order() == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("derived ranking is a permutation and sorts the distribution") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const size_t k = 2 + rng.below(7);
    auto probs = oracle::random_distribution(rng, k);
    // occasionally force ties
    if (rng.below(4) == 0 && k >= 3) probs[1] = probs[0];
    const auto d = ProbDistribution::renormalized(probs);
    const auto r = ranking_from_distribution(d);
    REQUIRE(r.size() == k);
    std::vector<bool> seen(k, false);
    double prev = 2.0;
    for (size_t pos = 0; pos < k; ++pos) {
      const int idx = r[pos];
      CHECK_FALSE(seen[static_cast<size_t>(idx)]);
      seen[static_cast<size_t>(idx)] = true;
      CHECK(d[static_cast<size_t>(idx)] <= prev + 1e-15);
      prev = d[static_cast<size_t>(idx)];
    }
  }
}

TEST_CASE("Question and GroupId invariants") {
  CHECK_THROWS_AS(Question({"q", {"A"}}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(Question({"q", {"A", "A"}}).validate(), std::invalid_argument);
  CHECK_NOTHROW(Question({"q", {"A", "B"}}).validate());
  CHECK_THROWS_AS(GroupId(""), std::invalid_argument);
}

namespace {

PreferenceDataset tiny_dataset() {
  std::vector<Question> questions{{"q1", {"A", "B"}}, {"q2", {"A", "B", "C"}}};
  std::vector<GroupId> groups{GroupId("g1"), GroupId("g2")};
  std::map<std::pair<std::string, std::string>, ProbDistribution> targets;
  targets.emplace(std::make_pair("g1", "q1"), ProbDistribution::validated({0.9, 0.1}));
  targets.emplace(std::make_pair("g2", "q1"), ProbDistribution::validated({0.2, 0.8}));
  targets.emplace(std::make_pair("g1", "q2"), ProbDistribution::validated({0.5, 0.3, 0.2}));
  targets.emplace(std::make_pair("g2", "q2"), ProbDistribution::validated({0.1, 0.1, 0.8}));
  return PreferenceDataset(questions, groups, targets, DatasetSplit{{"q1"}, {"q2"}});
}

}  // namespace

TEST_CASE("PreferenceDataset enforces coverage and split discipline") {
  CHECK_NOTHROW(tiny_dataset());

  std::vector<Question> questions{{"q1", {"A", "B"}}};
  std::vector<GroupId> groups{GroupId("g1")};
  std::map<std::pair<std::string, std::string>, ProbDistribution> targets;
  targets.emplace(std::make_pair("g1", "q1"), ProbDistribution::validated({0.9, 0.1}));

  // missing from split
  CHECK_THROWS_AS(PreferenceDataset(questions, groups, targets, DatasetSplit{{}, {}}),
                  std::invalid_argument);
  // overlapping split
  CHECK_THROWS_AS(PreferenceDataset(questions, groups, targets, DatasetSplit{{"q1"}, {"q1"}}),
                  std::invalid_argument);
  // missing target
  std::vector<GroupId> two_groups{GroupId("g1"), GroupId("g2")};
  CHECK_THROWS_AS(PreferenceDataset(questions, two_groups, targets, DatasetSplit{{"q1"}, {}}),
                  std::invalid_argument);

  const auto dataset = tiny_dataset();
  CHECK(dataset.target(GroupId("g1"), "q1")[0] == doctest::Approx(0.9));
  CHECK_THROWS_AS(dataset.target(GroupId("g1"), "zzz"), std::out_of_range);
  CHECK_THROWS_AS((void)dataset.question("zzz"), std::out_of_range);
}

TEST_CASE("RewardMatrix validates shape and range") {
  const std::vector<GroupId> groups{GroupId("a"), GroupId("b")};
  CHECK_NOTHROW(RewardMatrix(1, groups, 2, {0.1, 0.2, 0.3, 0.4}));
  CHECK_THROWS_AS(RewardMatrix(1, groups, 2, {0.1, 0.2, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(RewardMatrix(1, groups, 2, {0.1, 0.2, 0.3, 1.4}), std::invalid_argument);

  const RewardMatrix m(3, groups, 2, {0.1, 0.2, 0.3, 0.4});
  CHECK(m.at(0, 1) == 0.2);
  CHECK(m.item_rewards(1) == std::vector<double>{0.2, 0.4});
  CHECK(m.row(1)[0] == 0.3);
  CHECK(m.iteration() == 3);
}
