#include "appa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace appa {

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Js: return "js";
    case MetricKind::Wasserstein: return "wasserstein";
    case MetricKind::Cosine: return "cosine";
    case MetricKind::Borda: return "borda";
  }
  throw std::logic_error("unreachable");
}

MetricKind metric_from_string(std::string_view s) {
  if (s == "js") return MetricKind::Js;
  if (s == "wasserstein") return MetricKind::Wasserstein;
  if (s == "cosine") return MetricKind::Cosine;
  if (s == "borda") return MetricKind::Borda;
  throw std::invalid_argument("unknown metric: " + std::string(s));
}

bool metric_applies_to(MetricKind kind, TaskMode mode) {
  return (kind == MetricKind::Borda) == (mode == TaskMode::Opa);
}

namespace {

void require_same_length(const ProbDistribution& a, const ProbDistribution& b) {
  if (a.size() != b.size()) throw std::invalid_argument("distribution length mismatch");
}

// KL(p || m) in bits; 0 log 0 terms contribute nothing. m has positive mass
// wherever p does when m is a mixture containing p.
double kl_bits(const ProbDistribution& p, const std::vector<double>& m) {
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log2(p[i] / m[i]);
  }
  return kl;
}

}  // namespace

double js_reward(const ProbDistribution& pred, const ProbDistribution& target) {
  require_same_length(pred, target);
  std::vector<double> mix(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) mix[i] = 0.5 * (pred[i] + target[i]);
  const double jsd = 0.5 * kl_bits(pred, mix) + 0.5 * kl_bits(target, mix);
  return std::clamp(1.0 - jsd, 0.0, 1.0);
}

double wasserstein_reward(const ProbDistribution& pred, const ProbDistribution& target) {
  require_same_length(pred, target);
  const size_t k = pred.size();
  if (k < 2) throw std::invalid_argument("wasserstein_reward: K must be >= 2");
  double w1 = 0.0;
  double cdf_pred = 0.0, cdf_target = 0.0;
  for (size_t i = 0; i < k; ++i) {
    cdf_pred += pred[i];
    cdf_target += target[i];
    w1 += std::abs(cdf_pred - cdf_target);
  }
  return std::clamp(1.0 - w1 / static_cast<double>(k - 1), 0.0, 1.0);
}

double cosine_reward(const ProbDistribution& pred, const ProbDistribution& target) {
  require_same_length(pred, target);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    dot += pred[i] * target[i];
    na += pred[i] * pred[i];
    nb += target[i] * target[i];
  }
  if (na <= 0.0 || nb <= 0.0) throw std::invalid_argument("cosine_reward: zero-norm input");
  const double cosine = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(0.5 * (1.0 + cosine), 0.0, 1.0);
}

double borda_reward(const Ranking& pred, const Ranking& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("ranking length mismatch");
  const size_t k = pred.size();
  double credit = 0.0;
  for (size_t pos = 0; pos < k; ++pos) {
    if (pred[pos] == target[pos]) credit += static_cast<double>(k - pos);
  }
  return credit / (static_cast<double>(k) * static_cast<double>(k + 1) / 2.0);
}

double item_metric_reward(MetricKind kind, const RolloutItem& item,
                          const ProbDistribution& target) {
  if (!item.parsed) return 0.0;
  if (kind == MetricKind::Borda) {
    const auto* ranking = std::get_if<Ranking>(&*item.parsed);
    return ranking ? borda_reward(*ranking, ranking_from_distribution(target)) : 0.0;
  }
  const auto* d = std::get_if<ProbDistribution>(&*item.parsed);
  if (d == nullptr) return 0.0;
  switch (kind) {
    case MetricKind::Js: return js_reward(*d, target);
    case MetricKind::Wasserstein: return wasserstein_reward(*d, target);
    case MetricKind::Cosine: return cosine_reward(*d, target);
    case MetricKind::Borda: break;
  }
  return 0.0;
}

}  // namespace appa
