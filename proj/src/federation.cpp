#include "appa/federation.hpp"

#include <algorithm>
#include <future>

#include "appa/parsing.hpp"

namespace appa {

GroupClient::GroupClient(GroupId group, std::map<std::string, Question> questions,
                         std::map<std::string, ProbDistribution> targets, MetricKind metric,
                         double omega)
    : group_(std::move(group)),
      questions_(std::move(questions)),
      targets_(std::move(targets)),
      metric_(metric),
      omega_(omega) {
  if (omega_ < 0.0 || omega_ > 1.0) throw std::invalid_argument("GroupClient: omega outside [0,1]");
  for (const auto& [qid, q] : questions_) {
    auto it = targets_.find(qid);
    if (it == targets_.end())
      throw std::invalid_argument("GroupClient: missing target for question " + qid);
    if (it->second.size() != q.option_count())
      throw std::invalid_argument("GroupClient: target arity mismatch for question " + qid);
  }
}

GroupClient GroupClient::from_dataset(const PreferenceDataset& dataset, const GroupId& group,
                                      MetricKind metric, double omega) {
  std::map<std::string, Question> questions;
  std::map<std::string, ProbDistribution> targets;
  for (const auto& q : dataset.questions()) {
    questions.emplace(q.id, q);
    targets.emplace(q.id, dataset.target(group, q.id));
  }
  return GroupClient(group, std::move(questions), std::move(targets), metric, omega);
}

RewardReport GroupClient::evaluate(const RolloutBroadcast& broadcast) const {
  const TaskMode mode = broadcast.task_mode;
  if (!metric_applies_to(metric_, mode))
    throw std::invalid_argument("GroupClient: metric " + to_string(metric_) +
                                " does not apply to task " + to_string(mode));
  RewardReport report{group_, broadcast.iteration, {}};
  report.rewards.reserve(broadcast.items.size());
  for (const auto& [qid, response] : broadcast.items) {
    auto qit = questions_.find(qid);
    if (qit == questions_.end())
      throw std::invalid_argument("GroupClient " + group_.name() + ": unknown question id " + qid);
    const RolloutItem item = make_rollout_item(qit->second, mode, response);
    const double metric_reward = item_metric_reward(metric_, item, targets_.at(qid));
    report.rewards.push_back(blend_final_reward(metric_reward, item.format_score, omega_));
  }
  return report;
}

InProcessTransport::InProcessTransport(std::vector<GroupClient> clients)
    : clients_(std::move(clients)) {
  if (clients_.empty()) throw std::invalid_argument("InProcessTransport: no clients");
}

std::vector<GroupId> InProcessTransport::group_ids() const {
  std::vector<GroupId> ids;
  ids.reserve(clients_.size());
  for (const auto& c : clients_) ids.push_back(c.group());
  return ids;
}

std::vector<RewardReport> InProcessTransport::exchange(const RolloutBroadcast& broadcast) {
  std::vector<std::future<RewardReport>> futures;
  futures.reserve(clients_.size());
  for (const auto& client : clients_) {
    futures.push_back(std::async(std::launch::async,
                                 [&client, &broadcast] { return client.evaluate(broadcast); }));
  }
  std::vector<RewardReport> reports;
  reports.reserve(clients_.size());
  for (auto& f : futures) reports.push_back(f.get());
  return reports;
}

RoundResult run_round(FederationTransport& transport, const RolloutBroadcast& broadcast,
                      const AggregationStrategy& strategy, AggregationState state,
                      const AppaConfig& cfg) {
  if (broadcast.items.empty()) throw std::invalid_argument("run_round: empty broadcast");

  std::vector<RewardReport> reports = transport.exchange(broadcast);

  std::vector<GroupId> groups = transport.group_ids();
  std::sort(groups.begin(), groups.end());
  if (reports.size() != groups.size()) throw std::runtime_error("run_round: report count mismatch");

  // canonical group order keeps the matrix independent of arrival order
  std::map<GroupId, const RewardReport*> by_group;
  for (const auto& r : reports) {
    if (r.iteration != broadcast.iteration)
      throw std::runtime_error("run_round: report for wrong iteration from " + r.group.name());
    if (r.rewards.size() != broadcast.items.size())
      throw std::runtime_error("run_round: report length mismatch from " + r.group.name());
    if (!by_group.emplace(r.group, &r).second)
      throw std::runtime_error("run_round: duplicate report from " + r.group.name());
  }

  std::vector<double> values;
  values.reserve(groups.size() * broadcast.items.size());
  for (const auto& g : groups) {
    auto it = by_group.find(g);
    if (it == by_group.end()) throw std::runtime_error("run_round: missing report from " + g.name());
    values.insert(values.end(), it->second->rewards.begin(), it->second->rewards.end());
  }

  RewardMatrix matrix(broadcast.iteration, groups, broadcast.items.size(), std::move(values));
  auto [aggregated, next_state] = apply_strategy(strategy, matrix, std::move(state), cfg);
  return {std::move(aggregated), std::move(matrix), std::move(next_state)};
}

}  // namespace appa
