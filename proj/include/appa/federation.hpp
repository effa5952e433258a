#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "appa/aggregation.hpp"
#include "appa/domain.hpp"
#include "appa/metrics.hpp"
#include "appa/parsing.hpp"
#include "appa/wire.hpp"

namespace appa {

// A federated group: its own targets, a metric and a blend weight. Targets
// never leave the client; only scalar rewards cross the transport.
class GroupClient {
 public:
  GroupClient(GroupId group, std::map<std::string, Question> questions,
              std::map<std::string, ProbDistribution> targets, MetricKind metric,
              double omega = kDefaultOmega);

  static GroupClient from_dataset(const PreferenceDataset& dataset, const GroupId& group,
                                  MetricKind metric, double omega = kDefaultOmega);

  // Parses each response, scores it against this group's target and blends in
  // the format score. Unparseable responses earn zero.
  RewardReport evaluate(const RolloutBroadcast& broadcast) const;

  const GroupId& group() const { return group_; }
  MetricKind metric() const { return metric_; }

 private:
  GroupId group_;
  std::map<std::string, Question> questions_;
  std::map<std::string, ProbDistribution> targets_;
  MetricKind metric_;
  double omega_;
};

struct RoundTimeoutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class FederationTransport {
 public:
  virtual ~FederationTransport() = default;
  virtual std::vector<GroupId> group_ids() const = 0;
  // Broadcast one rollout and collect exactly one report per group.
  virtual std::vector<RewardReport> exchange(const RolloutBroadcast& broadcast) = 0;
};

// Clients evaluated on worker threads inside this process; no deadline.
class InProcessTransport : public FederationTransport {
 public:
  explicit InProcessTransport(std::vector<GroupClient> clients);
  std::vector<GroupId> group_ids() const override;
  std::vector<RewardReport> exchange(const RolloutBroadcast& broadcast) override;

 private:
  std::vector<GroupClient> clients_;
};

inline constexpr std::chrono::milliseconds kDefaultTcpDeadline{30000};

// Newline-delimited JSON over TCP. The server owns the listening socket and
// one connection per group; a round aborts if any report misses the deadline.
class TcpFederationServer : public FederationTransport {
 public:
  // port 0 picks a free port (see port()).
  TcpFederationServer(uint16_t port, std::vector<GroupId> expected_groups,
                      std::chrono::milliseconds deadline = kDefaultTcpDeadline);
  ~TcpFederationServer() override;

  TcpFederationServer(const TcpFederationServer&) = delete;
  TcpFederationServer& operator=(const TcpFederationServer&) = delete;

  uint16_t port() const;
  // Accept connections and process hellos until every expected group is in.
  void wait_for_clients();
  std::vector<GroupId> group_ids() const override;
  std::vector<RewardReport> exchange(const RolloutBroadcast& broadcast) override;
  // Notify connected clients and close body connections.
  void shutdown();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocking client loop: connect, send hello, answer rollouts until shutdown
// or the connection closes. Replies with an error message (and returns) on
// malformed or unknown input.
void run_group_client(const std::string& host, uint16_t port, const GroupClient& client);

struct RoundResult {
  std::vector<double> aggregated;  // per item, in broadcast order
  RewardMatrix matrix;
  AggregationState state;
};

// Algorithm round: broadcast, await all reports, assemble the reward matrix
// and apply the strategy. Fail-stop: a missing or ill-formed report aborts
// the round, no partial aggregation.
RoundResult run_round(FederationTransport& transport, const RolloutBroadcast& broadcast,
                      const AggregationStrategy& strategy, AggregationState state,
                      const AppaConfig& cfg);

}  // namespace appa
