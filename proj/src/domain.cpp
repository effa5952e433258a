#include "appa/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace appa {

std::string to_string(TaskMode mode) { return mode == TaskMode::Dpa ? "dpa" : "opa"; }

TaskMode task_mode_from_string(std::string_view s) {
  if (s == "dpa") return TaskMode::Dpa;
  if (s == "opa") return TaskMode::Opa;
  throw std::invalid_argument("unknown task mode: " + std::string(s));
}

ProbDistribution ProbDistribution::validated(std::vector<double> probs) {
  if (probs.size() < 2) throw std::invalid_argument("ProbDistribution: need K >= 2 options");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw std::invalid_argument("ProbDistribution: entry outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance)
    throw std::invalid_argument("ProbDistribution: entries do not sum to 1");
  return ProbDistribution(std::move(probs));
}

ProbDistribution ProbDistribution::renormalized(std::vector<double> weights) {
  if (weights.size() < 2) throw std::invalid_argument("ProbDistribution: need K >= 2 options");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw std::invalid_argument("ProbDistribution: negative or non-finite weight");
    sum += w;
  }
  if (sum <= kMinRenormalizableSum)
    throw std::invalid_argument("ProbDistribution: total mass too small to renormalize");
  for (double& w : weights) w /= sum;
  return ProbDistribution(std::move(weights));
}

Ranking Ranking::validated(std::vector<int> order) {
  const int k = static_cast<int>(order.size());
  if (k < 2) throw std::invalid_argument("Ranking: need K >= 2 options");
  std::vector<bool> seen(order.size(), false);
  for (int idx : order) {
    if (idx < 0 || idx >= k) throw std::invalid_argument("Ranking: index out of range");
    if (seen[static_cast<size_t>(idx)]) throw std::invalid_argument("Ranking: duplicate index");
    seen[static_cast<size_t>(idx)] = true;
  }
  return Ranking(std::move(order));
}

void Question::validate() const {
  if (id.empty()) throw std::invalid_argument("Question: empty id");
  if (option_labels.size() < 2) throw std::invalid_argument("Question: need K >= 2 options");
  std::set<std::string> unique(option_labels.begin(), option_labels.end());
  if (unique.size() != option_labels.size())
    throw std::invalid_argument("Question " + id + ": duplicate option labels");
}

GroupId::GroupId(std::string name) : name_(std::move(name)) {
  if (name_.empty()) throw std::invalid_argument("GroupId: empty name");
}

PreferenceDataset::PreferenceDataset(
    std::vector<Question> questions, std::vector<GroupId> groups,
    std::map<std::pair<std::string, std::string>, ProbDistribution> targets, DatasetSplit split)
    : questions_(std::move(questions)),
      groups_(std::move(groups)),
      targets_(std::move(targets)),
      split_(std::move(split)) {
  if (questions_.empty()) throw std::invalid_argument("PreferenceDataset: no questions");
  if (groups_.empty()) throw std::invalid_argument("PreferenceDataset: no groups");
  std::set<std::string> group_names;
  for (const auto& g : groups_) {
    if (!group_names.insert(g.name()).second)
      throw std::invalid_argument("PreferenceDataset: duplicate group " + g.name());
  }
  for (size_t i = 0; i < questions_.size(); ++i) {
    questions_[i].validate();
    if (!index_.emplace(questions_[i].id, i).second)
      throw std::invalid_argument("PreferenceDataset: duplicate question id " + questions_[i].id);
  }

  // split must be a disjoint cover of the question set
  std::set<std::string> seen;
  for (const auto& id : split_.train_ids) {
    if (!index_.count(id)) throw std::invalid_argument("split references unknown question " + id);
    if (!seen.insert(id).second) throw std::invalid_argument("split not disjoint at " + id);
  }
  for (const auto& id : split_.test_ids) {
    if (!index_.count(id)) throw std::invalid_argument("split references unknown question " + id);
    if (!seen.insert(id).second) throw std::invalid_argument("split not disjoint at " + id);
  }
  if (seen.size() != questions_.size())
    throw std::invalid_argument("split does not cover all questions");

  // every (group, question) pair needs a target of matching arity
  for (const auto& g : groups_) {
    for (const auto& q : questions_) {
      auto it = targets_.find({g.name(), q.id});
      if (it == targets_.end())
        throw std::invalid_argument("missing target for group " + g.name() + ", question " + q.id);
      if (it->second.size() != q.option_count())
        throw std::invalid_argument("target arity mismatch for question " + q.id);
    }
  }
}

const Question& PreferenceDataset::question(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown question id " + id);
  return questions_[it->second];
}

bool PreferenceDataset::has_question(const std::string& id) const { return index_.count(id) > 0; }

const ProbDistribution& PreferenceDataset::target(const GroupId& group,
                                                  const std::string& id) const {
  auto it = targets_.find({group.name(), id});
  if (it == targets_.end())
    throw std::out_of_range("no target for group " + group.name() + ", question " + id);
  return it->second;
}

RewardMatrix::RewardMatrix(int64_t iteration, std::vector<GroupId> groups, size_t item_count,
                           std::vector<double> values)
    : iteration_(iteration),
      groups_(std::move(groups)),
      item_count_(item_count),
      values_(std::move(values)) {
  if (groups_.empty()) throw std::invalid_argument("RewardMatrix: no groups");
  if (item_count_ == 0) throw std::invalid_argument("RewardMatrix: no items");
  if (values_.size() != groups_.size() * item_count_)
    throw std::invalid_argument("RewardMatrix: value count does not match shape");
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw std::invalid_argument("RewardMatrix: reward outside [0,1]");
  }
}

std::vector<double> RewardMatrix::item_rewards(size_t item) const {
  std::vector<double> out(groups_.size());
  for (size_t g = 0; g < groups_.size(); ++g) out[g] = at(g, item);
  return out;
}

Ranking ranking_from_distribution(const ProbDistribution& d) {
  std::vector<int> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (d[static_cast<size_t>(a)] != d[static_cast<size_t>(b)])
      return d[static_cast<size_t>(a)] > d[static_cast<size_t>(b)];
    return a < b;
  });
  return Ranking::validated(std::move(order));
}

}  // namespace appa
