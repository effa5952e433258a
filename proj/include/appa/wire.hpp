#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "appa/domain.hpp"

namespace appa {

inline constexpr int kProtocolVersion = 1;

// Server-to-client rollout for one iteration: question ids plus the raw
// response text in the task's output grammar.
struct RolloutBroadcast {
  int64_t iteration = 0;
  TaskMode task_mode = TaskMode::Dpa;
  std::vector<std::pair<std::string, std::string>> items;  // (question id, response)
};

// Client-to-server reply: one reward per broadcast item, in broadcast order.
struct RewardReport {
  GroupId group;
  int64_t iteration = 0;
  std::vector<double> rewards;
};

// Newline-delimited JSON envelope, one message per line:
//   {"type": "hello"|"rollout"|"reward_report"|"error"|"shutdown",
//    "iter": <int or null>, "payload": <object>}
struct Envelope {
  std::string type;
  std::optional<int64_t> iter;
  nlohmann::json payload;
};

std::string encode_envelope(const Envelope& env);       // one line, no trailing newline
Envelope decode_envelope(const std::string& line);      // throws WireError on malformed input

Envelope make_hello(const GroupId& group);
Envelope make_rollout(const RolloutBroadcast& broadcast);
Envelope make_reward_report(const RewardReport& report);
Envelope make_error(const std::string& message);
Envelope make_shutdown();

std::string hello_group(const Envelope& env);           // also checks protocol_version
RolloutBroadcast decode_rollout(const Envelope& env);
RewardReport decode_reward_report(const Envelope& env);

// Rewards cross the wire as shortest-round-trip decimal text so both
// transports produce bit-identical values.
std::string format_reward(double value);
double parse_reward(const std::string& text);

struct WireError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace appa
