#include "appa/aggregation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace appa {

void AppaConfig::validate() const {
  if (!(lambda_ema >= 0.0 && lambda_ema < 1.0))
    throw std::invalid_argument("AppaConfig: lambda_ema must be in [0,1)");
  if (!(temperature > 0.0)) throw std::invalid_argument("AppaConfig: temperature must be > 0");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("AppaConfig: tau must be in (0,1]");
  if (!(mu_min >= 0.0)) throw std::invalid_argument("AppaConfig: mu_min must be >= 0");
  if (!(cov_max > 0.0)) throw std::invalid_argument("AppaConfig: cov_max must be > 0");
}

AggregationState AggregationState::initial(const std::vector<GroupId>& groups) {
  if (groups.empty()) throw std::invalid_argument("AggregationState: no groups");
  AggregationState state;
  for (const auto& g : groups) state.histories.emplace(g, 0.0);
  const double uniform = 1.0 / static_cast<double>(groups.size());
  for (const auto& g : groups) state.weights.emplace(g, uniform);
  return state;
}

void AggregationState::validate() const {
  if (histories.empty()) throw std::invalid_argument("AggregationState: empty");
  double sum = 0.0;
  for (const auto& [g, w] : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("AggregationState: non-positive weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("AggregationState: weights do not sum to 1");
}

std::string strategy_name(const AggregationStrategy& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AverageStrategy>) {
          return "average";
        } else if constexpr (std::is_same_v<T, MinStrategy>) {
          return v.worst_group_per_iteration ? "min-worst-group" : "min";
        } else if constexpr (std::is_same_v<T, FixedAlphaStrategy>) {
          if (std::isinf(v.alpha)) return v.alpha > 0 ? "fixed:+inf" : "fixed:-inf";
          char buf[32];
          auto r = std::to_chars(buf, buf + sizeof buf, v.alpha);
          return "fixed:" + std::string(buf, r.ptr);
        } else {
          return "appa";
        }
      },
      s);
}

AggregationStrategy strategy_from_string(std::string_view s) {
  if (s == "average") return AverageStrategy{};
  if (s == "min") return MinStrategy{};
  if (s == "min-worst-group") return MinStrategy{.worst_group_per_iteration = true};
  if (s == "appa") return AppaStrategy{};
  if (s.starts_with("fixed:")) {
    const std::string_view arg = s.substr(6);
    if (arg == "+inf" || arg == "inf")
      return FixedAlphaStrategy{std::numeric_limits<double>::infinity()};
    if (arg == "-inf") return FixedAlphaStrategy{-std::numeric_limits<double>::infinity()};
    double alpha{};
    auto r = std::from_chars(arg.data(), arg.data() + arg.size(), alpha);
    if (r.ec != std::errc{} || r.ptr != arg.data() + arg.size())
      throw std::invalid_argument("bad fixed-alpha strategy: " + std::string(s));
    return FixedAlphaStrategy{alpha};
  }
  throw std::invalid_argument("unknown strategy: " + std::string(s));
}

namespace {

void require_non_empty(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("aggregation over empty reward vector");
}

// log((1/N) sum exp(x_i)) with max-shift stabilization
double log_mean_exp(std::span<const double> xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc / static_cast<double>(xs.size()));
}

}  // namespace

double average_agg(std::span<const double> rewards) {
  require_non_empty(rewards);
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum / static_cast<double>(rewards.size());
}

double min_agg(std::span<const double> rewards) {
  require_non_empty(rewards);
  return *std::min_element(rewards.begin(), rewards.end());
}

double fixed_alpha_agg(double alpha, std::span<const double> rewards) {
  require_non_empty(rewards);
  if (alpha == 0.0) return average_agg(rewards);
  if (std::isinf(alpha))
    return alpha > 0 ? *std::max_element(rewards.begin(), rewards.end()) : min_agg(rewards);
  std::vector<double> scaled(rewards.size());
  for (size_t i = 0; i < rewards.size(); ++i) scaled[i] = alpha * rewards[i];
  return log_mean_exp(scaled) / alpha;
}

double fairness_index(const RewardMatrix& rewards, const AppaConfig& cfg) {
  cfg.validate();
  const size_t n = rewards.group_count();
  double fi_sum = 0.0;
  size_t included = 0;
  for (size_t item = 0; item < rewards.item_count(); ++item) {
    double mean = 0.0;
    for (size_t g = 0; g < n; ++g) mean += rewards.at(g, item);
    mean /= static_cast<double>(n);
    if (mean < cfg.mu_min) continue;  // no mass, no disparity signal

    double var = 0.0;
    for (size_t g = 0; g < n; ++g) {
      const double d = rewards.at(g, item) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);  // population variance
    const double sigma = std::sqrt(var);

    double fi_item;
    if (sigma == 0.0) {
      fi_item = 1.0;
    } else {
      const double cov = std::min(sigma / mean, cfg.cov_max);
      fi_item = 1.0 / (1.0 + cov * cov);
    }
    fi_sum += fi_item;
    ++included;
  }
  if (included == 0) return 1.0;
  return fi_sum / static_cast<double>(included);
}

AggregationState update_history(AggregationState state,
                                const std::map<GroupId, double>& mean_rewards,
                                const AppaConfig& cfg) {
  cfg.validate();
  for (auto& [group, h] : state.histories) {
    auto it = mean_rewards.find(group);
    if (it == mean_rewards.end())
      throw std::invalid_argument("update_history: missing group " + group.name());
    if (!(it->second >= 0.0 && it->second <= 1.0))
      throw std::invalid_argument("update_history: mean reward outside [0,1] for " + group.name());
    h = cfg.lambda_ema * h + (1.0 - cfg.lambda_ema) * it->second;
  }
  return state;
}

std::map<GroupId, double> compute_weights(const AggregationState& state, const AppaConfig& cfg) {
  cfg.validate();
  if (state.histories.empty()) throw std::invalid_argument("compute_weights: empty state");
  std::vector<double> exponents;
  exponents.reserve(state.histories.size());
  for (const auto& [group, h] : state.histories)
    exponents.push_back((1.0 - h) / cfg.temperature);
  const double m = *std::max_element(exponents.begin(), exponents.end());
  double total = 0.0;
  for (double& e : exponents) {
    e = std::exp(e - m);
    total += e;
  }
  std::map<GroupId, double> weights;
  size_t i = 0;
  for (const auto& [group, h] : state.histories) weights.emplace(group, exponents[i++] / total);
  return weights;
}

AppaResult appa_aggregate(const RewardMatrix& rewards, AggregationState state,
                          const AppaConfig& cfg) {
  cfg.validate();
  if (state.histories.size() != rewards.group_count())
    throw std::invalid_argument("appa_aggregate: state does not match matrix groups");
  for (const auto& g : rewards.groups()) {
    if (!state.histories.count(g))
      throw std::invalid_argument("appa_aggregate: state missing group " + g.name());
  }

  // weights for iteration t come from the histories of iteration t-1
  state.weights = compute_weights(state, cfg);
  const double fi = fairness_index(rewards, cfg);

  const size_t n = rewards.group_count();
  std::vector<double> alpha(n);
  for (size_t g = 0; g < n; ++g) alpha[g] = state.weights.at(rewards.groups()[g]);

  std::vector<double> out(rewards.item_count());
  for (size_t item = 0; item < rewards.item_count(); ++item) {
    if (fi >= cfg.tau) {
      double mean = 0.0;
      for (size_t g = 0; g < n; ++g) mean += rewards.at(g, item);
      out[item] = mean / static_cast<double>(n);
    } else {
      std::vector<double> scaled(n);
      for (size_t g = 0; g < n; ++g) scaled[g] = alpha[g] * rewards.at(g, item);
      out[item] = log_mean_exp(scaled);
    }
  }

  state = update_history(std::move(state), group_mean_rewards(rewards), cfg);
  state.last_fi = fi;
  state.iteration = rewards.iteration();
  return {std::move(out), std::move(state)};
}

std::map<GroupId, double> effective_weights(const std::map<GroupId, double>& alpha,
                                            const std::map<GroupId, double>& item_rewards) {
  if (alpha.empty()) throw std::invalid_argument("effective_weights: empty weights");
  double denom = 0.0;
  for (const auto& [group, a] : alpha) {
    if (!(a > 0.0)) throw std::invalid_argument("effective_weights: weights must be positive");
    auto it = item_rewards.find(group);
    if (it == item_rewards.end())
      throw std::invalid_argument("effective_weights: missing reward for " + group.name());
    denom += std::exp(a * it->second);
  }
  std::map<GroupId, double> out;
  for (const auto& [group, a] : alpha)
    out.emplace(group, a * std::exp(a * item_rewards.at(group)) / denom);
  return out;
}

std::map<GroupId, double> group_mean_rewards(const RewardMatrix& rewards) {
  std::map<GroupId, double> means;
  for (size_t g = 0; g < rewards.group_count(); ++g) {
    const auto row = rewards.row(g);
    means.emplace(rewards.groups()[g], average_agg(row));
  }
  return means;
}

StrategyResult apply_strategy(const AggregationStrategy& strategy, const RewardMatrix& rewards,
                              AggregationState state, const AppaConfig& cfg) {
  if (std::holds_alternative<AppaStrategy>(strategy)) {
    auto [items, next] = appa_aggregate(rewards, std::move(state), cfg);
    return {std::move(items), std::move(next)};
  }

  // non-adaptive strategies keep the same fairness bookkeeping for diagnostics
  state.weights = compute_weights(state, cfg);
  const double fi = fairness_index(rewards, cfg);

  std::vector<double> out(rewards.item_count());
  if (std::holds_alternative<AverageStrategy>(strategy)) {
    for (size_t item = 0; item < rewards.item_count(); ++item)
      out[item] = average_agg(rewards.item_rewards(item));
  } else if (const auto* min_s = std::get_if<MinStrategy>(&strategy)) {
    if (min_s->worst_group_per_iteration) {
      const auto means = group_mean_rewards(rewards);
      size_t worst = 0;
      for (size_t g = 1; g < rewards.group_count(); ++g) {
        if (means.at(rewards.groups()[g]) < means.at(rewards.groups()[worst])) worst = g;
      }
      const auto row = rewards.row(worst);
      std::copy(row.begin(), row.end(), out.begin());
    } else {
      for (size_t item = 0; item < rewards.item_count(); ++item)
        out[item] = min_agg(rewards.item_rewards(item));
    }
  } else {
    const auto& fixed = std::get<FixedAlphaStrategy>(strategy);
    for (size_t item = 0; item < rewards.item_count(); ++item)
      out[item] = fixed_alpha_agg(fixed.alpha, rewards.item_rewards(item));
  }

  state = update_history(std::move(state), group_mean_rewards(rewards), cfg);
  state.last_fi = fi;
  state.iteration = rewards.iteration();
  return {std::move(out), std::move(state)};
}

}  // namespace appa
