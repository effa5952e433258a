#include "appa/parsing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace appa {

std::string to_string(FormatIssue issue) {
  switch (issue) {
    case FormatIssue::WrongCount: return "wrong-count";
    case FormatIssue::OutOfRange: return "out-of-range";
    case FormatIssue::BadSum: return "bad-sum";
    case FormatIssue::DuplicateLetter: return "duplicate-letter";
    case FormatIssue::UnknownLetter: return "unknown-letter";
    case FormatIssue::Unparseable: return "unparseable";
  }
  throw std::logic_error("unreachable");
}

const ProbDistribution* FormatReport::distribution() const {
  if (!parsed) return nullptr;
  return std::get_if<ProbDistribution>(&*parsed);
}

const Ranking* FormatReport::ranking() const {
  if (!parsed) return nullptr;
  return std::get_if<Ranking>(&*parsed);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> tokens;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    const size_t end = comma == std::string_view::npos ? s.size() : comma;
    tokens.push_back(trim(s.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (tokens.size() == 1 && tokens[0].empty()) tokens.clear();
  return tokens;
}

std::optional<double> parse_decimal(std::string_view token) {
  if (token.empty()) return std::nullopt;
  // strtod accepts hex floats, inf and nan; the grammar wants plain decimals
  for (char c : token) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-' ||
          c == 'e' || c == 'E'))
      return std::nullopt;
  }
  const std::string buf(token);
  char* end = nullptr;
  const double value = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

std::string serialize_dpa(const ProbDistribution& d) {
  const size_t k = d.size();
  std::vector<long> cents(k);
  long total = 0;
  for (size_t i = 0; i < k; ++i) {
    cents[i] = std::lround(d[i] * 100.0);
    total += cents[i];
  }
  // push the rounding residue onto the largest entry so the line self-validates
  const size_t largest =
      static_cast<size_t>(std::max_element(d.probs().begin(), d.probs().end()) - d.probs().begin());
  long residue = 100 - total;
  if (cents[largest] + residue >= 0) {
    cents[largest] += residue;
  } else {
    // large K corner: drain the residue one cent at a time from whichever
    // entry currently holds the most
    while (residue != 0) {
      const size_t at = static_cast<size_t>(
          std::max_element(cents.begin(), cents.end()) - cents.begin());
      cents[at] += residue > 0 ? 1 : -1;
      residue += residue > 0 ? -1 : 1;
    }
  }

  std::string out;
  char buf[32];
  for (size_t i = 0; i < k; ++i) {
    std::snprintf(buf, sizeof buf, "%ld.%02ld", cents[i] / 100, cents[i] % 100);
    if (i) out += ',';
    out += buf;
  }
  return out;
}

FormatReport parse_dpa(std::string_view text, size_t expected_k) {
  FormatReport report;
  const auto tokens = split_commas(trim(text));

  std::vector<double> values;
  values.reserve(tokens.size());
  bool all_numeric = !tokens.empty();
  for (const auto& token : tokens) {
    if (auto v = parse_decimal(token)) {
      values.push_back(*v);
    } else {
      all_numeric = false;
    }
  }

  if (values.empty()) {
    report.issues.push_back(FormatIssue::Unparseable);
    return report;  // score 0, nothing recovered
  }

  const bool count_ok = all_numeric && tokens.size() == expected_k;
  const bool range_ok =
      std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  // epsilon guard so two-decimal inputs sitting exactly on the boundary pass
  const bool sum_ok = std::abs(sum - 1.0) <= kDpaSumTolerance + 1e-9;

  if (!count_ok) report.issues.push_back(FormatIssue::WrongCount);
  if (!range_ok) report.issues.push_back(FormatIssue::OutOfRange);
  if (!sum_ok) report.issues.push_back(FormatIssue::BadSum);
  report.score = (count_ok + range_ok + sum_ok) / 3.0;

  if (count_ok && range_ok && sum > kMinRenormalizableSum)
    report.parsed = ProbDistribution::renormalized(std::move(values));
  return report;
}

std::string serialize_opa(const Ranking& r, const std::vector<std::string>& labels) {
  if (labels.size() != r.size()) throw std::invalid_argument("serialize_opa: label count mismatch");
  std::string out;
  for (size_t i = 0; i < r.size(); ++i) {
    if (i) out += ',';
    out += labels[static_cast<size_t>(r[i])];
  }
  return out;
}

FormatReport parse_opa(std::string_view text, const std::vector<std::string>& labels) {
  FormatReport report;
  const size_t k = labels.size();
  const auto tokens = split_commas(trim(text));
  if (tokens.empty()) {
    report.issues.push_back(FormatIssue::Unparseable);
    return report;
  }

  std::vector<int> recovered;
  std::vector<bool> used(k, false);
  // only the first K tokens count toward recovery; a short response simply
  // recovers fewer letters
  for (size_t t = 0; t < tokens.size() && t < k; ++t) {
    const auto it = std::find(labels.begin(), labels.end(), std::string(tokens[t]));
    if (it == labels.end()) {
      report.issues.push_back(FormatIssue::UnknownLetter);
      continue;
    }
    const size_t idx = static_cast<size_t>(it - labels.begin());
    if (used[idx]) {
      report.issues.push_back(FormatIssue::DuplicateLetter);
      continue;
    }
    used[idx] = true;
    recovered.push_back(static_cast<int>(idx));
  }
  if (tokens.size() < k) report.issues.push_back(FormatIssue::WrongCount);

  report.score = static_cast<double>(recovered.size()) / static_cast<double>(k);
  if (recovered.size() == k) report.parsed = Ranking::validated(std::move(recovered));
  return report;
}

double blend_final_reward(double metric_reward, double format_score, double omega) {
  if (omega < 0.0 || omega > 1.0) throw std::invalid_argument("blend: omega outside [0,1]");
  if (metric_reward < 0.0 || metric_reward > 1.0)
    throw std::invalid_argument("blend: metric reward outside [0,1]");
  if (format_score < 0.0 || format_score > 1.0)
    throw std::invalid_argument("blend: format score outside [0,1]");
  return omega * metric_reward + (1.0 - omega) * format_score;
}

RolloutItem make_rollout_item(const Question& question, TaskMode mode, std::string raw_response) {
  FormatReport report = mode == TaskMode::Dpa ? parse_dpa(raw_response, question.option_count())
                                              : parse_opa(raw_response, question.option_labels);
  return RolloutItem{question.id, std::move(raw_response), std::move(report.parsed), report.score};
}

}  // namespace appa
