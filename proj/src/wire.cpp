#include "appa/wire.hpp"

#include <charconv>
#include <cmath>

namespace appa {

using nlohmann::json;

std::string encode_envelope(const Envelope& env) {
  json j;
  j["type"] = env.type;
  j["iter"] = env.iter ? json(*env.iter) : json(nullptr);
  j["payload"] = env.payload;
  return j.dump();
}

Envelope decode_envelope(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw WireError("malformed message: not a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw WireError("message missing type");
  if (!j.contains("payload") || !j["payload"].is_object())
    throw WireError("message missing payload");
  Envelope env;
  env.type = j["type"].get<std::string>();
  if (j.contains("iter") && j["iter"].is_number_integer())
    env.iter = j["iter"].get<int64_t>();
  env.payload = j["payload"];
  return env;
}

Envelope make_hello(const GroupId& group) {
  return {"hello", std::nullopt, json{{"group", group.name()}, {"protocol_version", kProtocolVersion}}};
}

Envelope make_rollout(const RolloutBroadcast& broadcast) {
  json items = json::array();
  for (const auto& [qid, response] : broadcast.items)
    items.push_back(json{{"question_id", qid}, {"response", response}});
  return {"rollout", broadcast.iteration,
          json{{"task_mode", to_string(broadcast.task_mode)}, {"items", std::move(items)}}};
}

Envelope make_reward_report(const RewardReport& report) {
  json rewards = json::array();
  for (double r : report.rewards) rewards.push_back(format_reward(r));
  return {"reward_report", report.iteration,
          json{{"group", report.group.name()}, {"rewards", std::move(rewards)}}};
}

Envelope make_error(const std::string& message) {
  return {"error", std::nullopt, json{{"message", message}}};
}

Envelope make_shutdown() { return {"shutdown", std::nullopt, json::object()}; }

std::string hello_group(const Envelope& env) {
  if (env.type != "hello") throw WireError("expected hello, got " + env.type);
  if (!env.payload.contains("group") || !env.payload["group"].is_string())
    throw WireError("hello missing group");
  if (!env.payload.contains("protocol_version") ||
      env.payload["protocol_version"].get<int>() != kProtocolVersion)
    throw WireError("unsupported protocol version");
  return env.payload["group"].get<std::string>();
}

RolloutBroadcast decode_rollout(const Envelope& env) {
  if (env.type != "rollout") throw WireError("expected rollout, got " + env.type);
  if (!env.iter) throw WireError("rollout missing iteration");
  RolloutBroadcast b;
  b.iteration = *env.iter;
  b.task_mode = task_mode_from_string(env.payload.at("task_mode").get<std::string>());
  for (const auto& item : env.payload.at("items"))
    b.items.emplace_back(item.at("question_id").get<std::string>(),
                         item.at("response").get<std::string>());
  return b;
}

RewardReport decode_reward_report(const Envelope& env) {
  if (env.type != "reward_report") throw WireError("expected reward_report, got " + env.type);
  if (!env.iter) throw WireError("reward_report missing iteration");
  RewardReport report{GroupId(env.payload.at("group").get<std::string>()), *env.iter, {}};
  for (const auto& r : env.payload.at("rewards"))
    report.rewards.push_back(parse_reward(r.get<std::string>()));
  return report;
}

std::string format_reward(double value) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

double parse_reward(const std::string& text) {
  double value{};
  auto r = std::from_chars(text.data(), text.data() + text.size(), value);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size() || !std::isfinite(value))
    throw WireError("bad reward value: " + text);
  return value;
}

}  // namespace appa
