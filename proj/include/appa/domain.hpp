#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace appa {

// Validity tolerance for probability vectors; looser parse-time tolerances
// live in parsing.hpp.
inline constexpr double kProbSumTolerance = 1e-6;
// Smallest total mass a raw weight vector may carry and still be renormalized.
inline constexpr double kMinRenormalizableSum = 1e-6;

enum class TaskMode { Dpa, Opa };

std::string to_string(TaskMode mode);
TaskMode task_mode_from_string(std::string_view s);

// Probability vector over K >= 2 answer options. Immutable once built.
class ProbDistribution {
 public:
  // Requires entries in [0,1] summing to 1 within kProbSumTolerance.
  static ProbDistribution validated(std::vector<double> probs);
  // Divides by the sum; rejects non-negative-weight or near-zero-mass input.
  static ProbDistribution renormalized(std::vector<double> weights);

  size_t size() const { return probs_.size(); }
  double operator[](size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

  bool operator==(const ProbDistribution&) const = default;

 private:
  explicit ProbDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

// Permutation of {0..K-1}, most preferred option first.
class Ranking {
 public:
  static Ranking validated(std::vector<int> order);

  size_t size() const { return order_.size(); }
  int operator[](size_t i) const { return order_[i]; }
  const std::vector<int>& order() const { return order_; }

  bool operator==(const Ranking&) const = default;

 private:
  explicit Ranking(std::vector<int> order) : order_(std::move(order)) {}
  std::vector<int> order_;
};

struct Question {
  std::string id;
  std::vector<std::string> option_labels;  // K >= 2, unique

  size_t option_count() const { return option_labels.size(); }
  void validate() const;
};

class GroupId {
 public:
  explicit GroupId(std::string name);
  const std::string& name() const { return name_; }
  auto operator<=>(const GroupId&) const = default;

 private:
  std::string name_;
};

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// Questions plus per-(group, question) target distributions and a
// train/test partition of question ids. Built once, immutable afterwards.
class PreferenceDataset {
 public:
  PreferenceDataset(std::vector<Question> questions, std::vector<GroupId> groups,
                    std::map<std::pair<std::string, std::string>, ProbDistribution> targets,
                    DatasetSplit split);

  const std::vector<Question>& questions() const { return questions_; }
  const std::vector<GroupId>& groups() const { return groups_; }
  const DatasetSplit& split() const { return split_; }

  const Question& question(const std::string& id) const;
  bool has_question(const std::string& id) const;
  // Target distribution of `group` for question `id`; throws if absent.
  const ProbDistribution& target(const GroupId& group, const std::string& id) const;

 private:
  std::vector<Question> questions_;
  std::vector<GroupId> groups_;
  std::map<std::pair<std::string, std::string>, ProbDistribution> targets_;  // (group, qid)
  std::map<std::string, size_t> index_;
  DatasetSplit split_;
};

struct RolloutItem {
  std::string question_id;
  std::string raw_response;
  std::optional<std::variant<ProbDistribution, Ranking>> parsed;
  double format_score = 0.0;
};

// Dense per-iteration table of rewards: one row per group, one column per
// rollout item, all values in [0,1].
class RewardMatrix {
 public:
  RewardMatrix(int64_t iteration, std::vector<GroupId> groups, size_t item_count,
               std::vector<double> values /* row-major [group][item] */);

  int64_t iteration() const { return iteration_; }
  const std::vector<GroupId>& groups() const { return groups_; }
  size_t group_count() const { return groups_.size(); }
  size_t item_count() const { return item_count_; }

  double at(size_t group_idx, size_t item) const { return values_[group_idx * item_count_ + item]; }
  std::span<const double> row(size_t group_idx) const {
    return {values_.data() + group_idx * item_count_, item_count_};
  }
  std::vector<double> item_rewards(size_t item) const;

 private:
  int64_t iteration_;
  std::vector<GroupId> groups_;
  size_t item_count_;
  std::vector<double> values_;
};

// Indices sorted by descending probability, ties broken by ascending
// option index so derived rankings are reproducible.
Ranking ranking_from_distribution(const ProbDistribution& d);

}  // namespace appa
