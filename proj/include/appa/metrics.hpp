#pragma once

#include <string>
#include <string_view>

#include "appa/domain.hpp"

namespace appa {

enum class MetricKind { Js, Wasserstein, Cosine, Borda };

std::string to_string(MetricKind kind);
MetricKind metric_from_string(std::string_view s);

// JS/Wasserstein/Cosine score distributions (DPA); Borda scores rankings (OPA).
bool metric_applies_to(MetricKind kind, TaskMode mode);

// All four rewards map to [0,1], higher = closer to the target.

// 1 - JSD(pred || target) with base-2 logs so the divergence itself is in [0,1].
double js_reward(const ProbDistribution& pred, const ProbDistribution& target);

// 1 - W1(pred, target) / (K-1) treating options as positions 0..K-1 on a line;
// W1 computed from cumulative-distribution differences (exact in 1D).
double wasserstein_reward(const ProbDistribution& pred, const ProbDistribution& target);

// (1 + cosine(pred, target)) / 2.
double cosine_reward(const ProbDistribution& pred, const ProbDistribution& target);

// Position-weighted agreement: sum of (K-k+1) over matching positions k,
// normalized by K(K+1)/2.
double borda_reward(const Ranking& pred, const Ranking& target);

// Reward of a parsed rollout item against a group's target distribution;
// items without a parsed value earn 0. Borda compares against the ranking
// derived from the target.
double item_metric_reward(MetricKind kind, const RolloutItem& item,
                          const ProbDistribution& target);

}  // namespace appa
