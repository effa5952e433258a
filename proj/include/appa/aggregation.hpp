#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "appa/domain.hpp"

namespace appa {

struct AppaConfig {
  double lambda_ema = 0.8;   // EMA decay for per-group history
  double temperature = 0.1;  // reversed-softmax temperature
  double tau = 0.99;         // fairness threshold gating the adaptive branch
  double mu_min = 1e-6;      // questions with mean reward below this are excluded from FI
  double cov_max = 10.0;     // cap on the coefficient of variation

  void validate() const;
};

// Per-group EMA histories, current weights and last Fairness Index: the
// server's only persistent fairness state.
struct AggregationState {
  std::map<GroupId, double> histories;  // h_g, starts at 0
  std::map<GroupId, double> weights;    // alpha_g, strictly positive, sums to 1
  double last_fi = 1.0;
  int64_t iteration = 0;

  static AggregationState initial(const std::vector<GroupId>& groups);
  void validate() const;
};

struct AverageStrategy {};
struct MinStrategy {
  // false: per-item minimum across groups; true: all items scored by the
  // group with the worst mean reward this iteration
  bool worst_group_per_iteration = false;
};
struct FixedAlphaStrategy {
  double alpha = 0.0;  // may be +-infinity
};
struct AppaStrategy {};

using AggregationStrategy =
    std::variant<AverageStrategy, MinStrategy, FixedAlphaStrategy, AppaStrategy>;

std::string strategy_name(const AggregationStrategy& s);
// Accepts "average", "min", "min-worst-group", "appa", "fixed:<alpha>",
// "fixed:-inf", "fixed:+inf".
AggregationStrategy strategy_from_string(std::string_view s);

double average_agg(std::span<const double> rewards);
double min_agg(std::span<const double> rewards);

// (1/alpha) log((1/N) sum exp(alpha r_i)) for finite alpha != 0; the mean at
// alpha = 0 and the min/max limits at -+infinity. Stabilized by max-shift.
double fixed_alpha_agg(double alpha, std::span<const double> rewards);

// Mean over questions of 1/(1+CoV^2) with the numerical safeguards: questions
// whose mean reward is below mu_min are excluded, zero spread scores 1
// directly, CoV is capped at cov_max, and an empty average falls back to 1.
double fairness_index(const RewardMatrix& rewards, const AppaConfig& cfg);

// h_g <- lambda h_g + (1-lambda) mean_reward_g. Mean rewards must cover every
// group in the state and be raw (pre-whitening) values in [0,1].
AggregationState update_history(AggregationState state,
                                const std::map<GroupId, double>& mean_rewards,
                                const AppaConfig& cfg);

// Reversed softmax over (1 - h_g)/T using the state's current (previous
// iteration) histories. Strictly positive, sums to 1.
std::map<GroupId, double> compute_weights(const AggregationState& state, const AppaConfig& cfg);

struct AppaResult {
  std::vector<double> item_rewards;
  AggregationState state;
};

// One Fairness Index over the whole rollout decides the branch for every
// item: plain mean when FI >= tau, otherwise log((1/N) sum_g exp(alpha_g r_g)).
// Histories are EMA-updated and FI recorded in the returned state.
AppaResult appa_aggregate(const RewardMatrix& rewards, AggregationState state,
                          const AppaConfig& cfg);

// d(adaptive aggregate)/d r_g = alpha_g exp(alpha_g r_g) / sum_g' exp(alpha_g' r_g').
// Diagnostic only; never fed back into training.
std::map<GroupId, double> effective_weights(const std::map<GroupId, double>& alpha,
                                            const std::map<GroupId, double>& item_rewards);

// Per-group mean of the matrix rows (the raw r-bar fed to the EMA).
std::map<GroupId, double> group_mean_rewards(const RewardMatrix& rewards);

struct StrategyResult {
  std::vector<double> item_rewards;
  AggregationState state;
};

// Applies the chosen strategy to a round's reward matrix. Every strategy
// updates the fairness bookkeeping (weights from the previous histories, FI
// of this rollout, EMA update) so diagnostics stay comparable across runs.
StrategyResult apply_strategy(const AggregationStrategy& strategy, const RewardMatrix& rewards,
                              AggregationState state, const AppaConfig& cfg);

}  // namespace appa
