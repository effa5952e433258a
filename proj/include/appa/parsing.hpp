#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "appa/domain.hpp"

namespace appa {

// Weight of the metric reward vs. the format score in the final training reward.
inline constexpr double kDefaultOmega = 0.85;
// How far a parsed DPA line's sum may drift from 1 and still pass the sum check;
// two-decimal rounding of up to 8 entries stays well inside this.
inline constexpr double kDpaSumTolerance = 0.02;

enum class FormatIssue {
  WrongCount,
  OutOfRange,
  BadSum,
  DuplicateLetter,
  UnknownLetter,
  Unparseable,
};

std::string to_string(FormatIssue issue);

struct FormatReport {
  double score = 0.0;
  std::optional<std::variant<ProbDistribution, Ranking>> parsed;
  std::vector<FormatIssue> issues;

  const ProbDistribution* distribution() const;
  const Ranking* ranking() const;
};

// One line of comma-separated two-decimal values, no spaces. The largest
// entry absorbs the rounding residue so the printed values sum to exactly 1.00.
std::string serialize_dpa(const ProbDistribution& d);

// Scores three equally weighted binary checks (value count, range, sum) and
// recovers a renormalized distribution when count and range pass.
FormatReport parse_dpa(std::string_view text, size_t expected_k);

// Option labels in rank order, comma-separated, no spaces.
std::string serialize_opa(const Ranking& r, const std::vector<std::string>& labels);

// Score = recovered valid, non-duplicate labels among the first K tokens / K;
// a ranking is returned only for a complete permutation.
FormatReport parse_opa(std::string_view text, const std::vector<std::string>& labels);

// omega * metric_reward + (1 - omega) * format_score.
double blend_final_reward(double metric_reward, double format_score,
                          double omega = kDefaultOmega);

// Parse one response in the task's grammar into a scored rollout item.
RolloutItem make_rollout_item(const Question& question, TaskMode mode, std::string raw_response);

}  // namespace appa
