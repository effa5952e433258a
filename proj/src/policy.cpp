#include "appa/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "appa/parsing.hpp"

namespace appa {

using nlohmann::json;

void PPOConfig::validate() const {
  if (!(clip_range > 0.0)) throw std::invalid_argument("PPOConfig: clip_range must be > 0");
  if (!(clip_range_value > 0.0))
    throw std::invalid_argument("PPOConfig: clip_range_value must be > 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("PPOConfig: gamma outside [0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw std::invalid_argument("PPOConfig: gae_lambda outside [0,1]");
  if (ppo_epochs < 1) throw std::invalid_argument("PPOConfig: ppo_epochs must be >= 1");
  if (minibatches < 1) throw std::invalid_argument("PPOConfig: minibatches must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("PPOConfig: learning_rate must be > 0");
  if (!(reward_clamp > 0.0)) throw std::invalid_argument("PPOConfig: reward_clamp must be > 0");
  if (!(kl_coef >= 0.0)) throw std::invalid_argument("PPOConfig: kl_coef must be >= 0");
  if (!(vf_coef >= 0.0)) throw std::invalid_argument("PPOConfig: vf_coef must be >= 0");
  if (!(entropy_coef >= 0.0)) throw std::invalid_argument("PPOConfig: entropy_coef must be >= 0");
}

TabularPolicy TabularPolicy::make(TaskMode task, const std::vector<Question>& questions, int bins,
                                  double temperature) {
  if (bins < 2) throw std::invalid_argument("TabularPolicy: need at least 2 grid bins");
  if (!(temperature > 0.0)) throw std::invalid_argument("TabularPolicy: temperature must be > 0");
  TabularPolicy policy;
  policy.task_ = task;
  policy.bins_ = bins;
  policy.temperature_ = temperature;
  for (const auto& q : questions) {
    q.validate();
    const size_t k = q.option_count();
    if (task == TaskMode::Opa && k > 32)
      throw std::invalid_argument("TabularPolicy: OPA supports at most 32 options");
    const size_t actions = task == TaskMode::Dpa ? static_cast<size_t>(bins) : k;
    policy.logits_.emplace(q.id, std::vector<std::vector<double>>(k, std::vector<double>(actions, 0.0)));
  }
  if (policy.logits_.empty()) throw std::invalid_argument("TabularPolicy: no questions");
  return policy;
}

TabularPolicy TabularPolicy::from_tables(
    TaskMode task, int bins, double temperature,
    std::map<std::string, std::vector<std::vector<double>>> logits) {
  if (bins < 2) throw std::invalid_argument("TabularPolicy: need at least 2 grid bins");
  if (!(temperature > 0.0)) throw std::invalid_argument("TabularPolicy: temperature must be > 0");
  if (logits.empty()) throw std::invalid_argument("TabularPolicy: no questions");
  for (const auto& [qid, rows] : logits) {
    if (rows.empty()) throw std::invalid_argument("TabularPolicy: empty table for " + qid);
    const size_t expected = task == TaskMode::Dpa ? static_cast<size_t>(bins) : rows.size();
    for (const auto& row : rows) {
      if (row.size() != expected)
        throw std::invalid_argument("TabularPolicy: bad row width for " + qid);
      for (double z : row) {
        if (!std::isfinite(z)) throw std::invalid_argument("TabularPolicy: non-finite logit");
      }
    }
  }
  TabularPolicy policy;
  policy.task_ = task;
  policy.bins_ = bins;
  policy.temperature_ = temperature;
  policy.logits_ = std::move(logits);
  return policy;
}

size_t TabularPolicy::step_count(const std::string& qid) const {
  auto it = logits_.find(qid);
  if (it == logits_.end()) throw std::out_of_range("TabularPolicy: unknown question " + qid);
  return it->second.size();
}

size_t TabularPolicy::action_count(const std::string& qid) const {
  auto it = logits_.find(qid);
  if (it == logits_.end()) throw std::out_of_range("TabularPolicy: unknown question " + qid);
  return it->second.front().size();
}

std::vector<double> TabularPolicy::step_probs(const std::string& qid, size_t step,
                                              uint32_t mask) const {
  auto it = logits_.find(qid);
  if (it == logits_.end()) throw std::out_of_range("TabularPolicy: unknown question " + qid);
  if (step >= it->second.size()) throw std::out_of_range("TabularPolicy: step out of range");
  const std::vector<double>& z = it->second[step];

  double max_z = -std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < z.size(); ++a) {
    if (mask & (1u << a)) continue;
    max_z = std::max(max_z, z[a]);
  }
  if (!std::isfinite(max_z)) throw std::invalid_argument("TabularPolicy: all actions masked");

  std::vector<double> probs(z.size(), 0.0);
  double total = 0.0;
  for (size_t a = 0; a < z.size(); ++a) {
    if (mask & (1u << a)) continue;
    probs[a] = std::exp((z[a] - max_z) / temperature_);
    total += probs[a];
  }
  for (double& p : probs) p /= total;
  return probs;
}

double TabularPolicy::log_prob(const std::string& qid, size_t step, uint32_t mask,
                               int action) const {
  const auto probs = step_probs(qid, step, mask);
  if (action < 0 || static_cast<size_t>(action) >= probs.size() ||
      probs[static_cast<size_t>(action)] <= 0.0)
    throw std::invalid_argument("TabularPolicy: log_prob of unavailable action");
  return std::log(probs[static_cast<size_t>(action)]);
}

int TabularPolicy::greedy_action(const std::string& qid, size_t step, uint32_t mask) const {
  auto it = logits_.find(qid);
  if (it == logits_.end()) throw std::out_of_range("TabularPolicy: unknown question " + qid);
  const std::vector<double>& z = it->second[step];
  int best = -1;
  for (size_t a = 0; a < z.size(); ++a) {
    if (mask & (1u << a)) continue;
    if (best < 0 || z[a] > z[static_cast<size_t>(best)]) best = static_cast<int>(a);
  }
  if (best < 0) throw std::invalid_argument("TabularPolicy: all actions masked");
  return best;
}

double TabularPolicy::grid_weight(int bin) const {
  return static_cast<double>(bin) / static_cast<double>(bins_ - 1);
}

ValueTable ValueTable::zeros(const std::vector<Question>& questions) {
  ValueTable table;
  for (const auto& q : questions)
    table.values.emplace(q.id, std::vector<double>(q.option_count(), 0.0));
  return table;
}

namespace {

// Decode the per-step actions of one question into the response string.
std::string response_from_actions(const TabularPolicy& policy, const Question& question,
                                  const std::vector<int>& actions) {
  if (policy.task() == TaskMode::Dpa) {
    std::vector<double> weights(actions.size());
    double total = 0.0;
    for (size_t k = 0; k < actions.size(); ++k) {
      weights[k] = policy.grid_weight(actions[k]);
      total += weights[k];
    }
    if (total <= kMinRenormalizableSum) {
      // all-zero draw: fall back to a uniform answer
      std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(weights.size()));
      return serialize_dpa(ProbDistribution::validated(std::move(weights)));
    }
    return serialize_dpa(ProbDistribution::renormalized(std::move(weights)));
  }
  return serialize_opa(Ranking::validated(actions), question.option_labels);
}

template <typename PickAction>
std::pair<std::vector<int>, std::vector<TrajectoryStep>> decode_steps(
    const TabularPolicy& policy, const TabularPolicy* reference, const ValueTable* values,
    const Question& question, PickAction&& pick) {
  const size_t k = question.option_count();
  std::vector<int> actions;
  std::vector<TrajectoryStep> steps;
  actions.reserve(k);
  uint32_t mask = 0;
  for (size_t step = 0; step < k; ++step) {
    const int action = pick(question.id, step, mask);
    if (reference != nullptr) {
      TrajectoryStep s;
      s.action = action;
      s.mask = mask;
      s.logp_behavior = policy.log_prob(question.id, step, mask, action);
      s.logp_ref = reference->log_prob(question.id, step, mask, action);
      s.value = values->values.at(question.id)[step];
      steps.push_back(s);
    }
    actions.push_back(action);
    if (policy.task() == TaskMode::Opa) mask |= 1u << action;
  }
  return {std::move(actions), std::move(steps)};
}

}  // namespace

RolloutResult rollout(const TabularPolicy& policy, const TabularPolicy& reference,
                      const ValueTable& values, const std::vector<Question>& questions,
                      uint64_t seed) {
  if (reference.task() != policy.task())
    throw std::invalid_argument("rollout: reference task mode mismatch");
  RolloutResult out;
  out.broadcast.task_mode = policy.task();
  out.trajectories.reserve(questions.size());
  for (const auto& q : questions) {
    Rng rng(mix_seed(seed, q.id));
    auto [actions, steps] = decode_steps(
        policy, &reference, &values, q,
        [&](const std::string& qid, size_t step, uint32_t mask) {
          return static_cast<int>(rng.categorical(policy.step_probs(qid, step, mask)));
        });
    Trajectory traj;
    traj.question_id = q.id;
    traj.steps = std::move(steps);
    out.trajectories.push_back(std::move(traj));
    out.broadcast.items.emplace_back(q.id, response_from_actions(policy, q, actions));
  }
  return out;
}

std::string greedy_response(const TabularPolicy& policy, const Question& question) {
  auto [actions, steps] =
      decode_steps(policy, nullptr, nullptr, question,
                   [&](const std::string& qid, size_t step, uint32_t mask) {
                     return policy.greedy_action(qid, step, mask);
                   });
  return response_from_actions(policy, question, actions);
}

std::string sampled_response(const TabularPolicy& policy, const Question& question, Rng& rng) {
  auto [actions, steps] = decode_steps(
      policy, nullptr, nullptr, question,
      [&](const std::string& qid, size_t step, uint32_t mask) {
        return static_cast<int>(rng.categorical(policy.step_probs(qid, step, mask)));
      });
  return response_from_actions(policy, question, actions);
}

std::vector<double> shape_rewards(const Trajectory& traj, double beta) {
  if (traj.steps.empty()) throw std::invalid_argument("shape_rewards: empty trajectory");
  std::vector<double> rewards(traj.steps.size());
  for (size_t t = 0; t < traj.steps.size(); ++t)
    rewards[t] = -beta * (traj.steps[t].logp_behavior - traj.steps[t].logp_ref);
  rewards.back() += traj.terminal_reward;
  return rewards;
}

std::vector<double> whiten_and_clamp(std::vector<double> rewards, const PPOConfig& cfg) {
  if (rewards.empty()) throw std::invalid_argument("whiten_and_clamp: empty batch");
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) /
                      static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());
  const double std_dev = std::sqrt(var);
  if (std_dev < 1e-8) {
    std::fill(rewards.begin(), rewards.end(), 0.0);
    return rewards;
  }
  for (double& r : rewards)
    r = std::clamp((r - mean) / std_dev, -cfg.reward_clamp, cfg.reward_clamp);
  return rewards;
}

GaeResult gae(std::span<const double> rewards, std::span<const double> values, double gamma,
              double lambda) {
  if (rewards.size() != values.size() || rewards.empty())
    throw std::invalid_argument("gae: rewards and values must align and be non-empty");
  const size_t n = rewards.size();
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double next_advantage = 0.0;
  double next_value = 0.0;  // terminal bootstrap
  for (size_t i = n; i-- > 0;) {
    const double delta = rewards[i] + gamma * next_value - values[i];
    next_advantage = delta + gamma * lambda * next_advantage;
    out.advantages[i] = next_advantage;
    out.returns[i] = next_advantage + values[i];
    next_value = values[i];
  }
  return out;
}

std::vector<StepSample> build_samples(const std::vector<Trajectory>& trajectories,
                                      const PPOConfig& cfg) {
  std::vector<std::vector<double>> shaped;
  shaped.reserve(trajectories.size());
  for (const auto& traj : trajectories) shaped.push_back(shape_rewards(traj, cfg.kl_coef));

  if (cfg.whiten_rewards && !cfg.whiten_before_shaping) {
    // alternative order: whiten the shaped per-step rewards across the batch
    std::vector<double> flat;
    for (const auto& r : shaped) flat.insert(flat.end(), r.begin(), r.end());
    flat = whiten_and_clamp(std::move(flat), cfg);
    size_t at = 0;
    for (auto& r : shaped) {
      for (double& v : r) v = flat[at++];
    }
  }

  std::vector<StepSample> samples;
  for (size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& traj = trajectories[i];
    std::vector<double> values(traj.steps.size());
    for (size_t t = 0; t < traj.steps.size(); ++t) values[t] = traj.steps[t].value;
    const GaeResult g = gae(shaped[i], values, cfg.gamma, cfg.gae_lambda);
    for (size_t t = 0; t < traj.steps.size(); ++t) {
      StepSample s;
      s.question_id = traj.question_id;
      s.step = static_cast<int>(t);
      s.action = traj.steps[t].action;
      s.mask = traj.steps[t].mask;
      s.logp_behavior = traj.steps[t].logp_behavior;
      s.value_old = traj.steps[t].value;
      s.advantage = g.advantages[t];
      s.ret = g.returns[t];
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

namespace {

struct BatchEval {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total_loss = 0.0;
};

// Loss (and optionally gradients) of the PPO surrogate over one batch.
// Branch selection here is the single source of truth for the analytic
// gradients checked against finite differences.
BatchEval eval_batch(const TabularPolicy& policy, const ValueTable& values,
                     std::span<const StepSample* const> batch, const PPOConfig& cfg,
                     GradientTables* grads) {
  const double m = static_cast<double>(batch.size());
  const double temp = policy.temperature();
  BatchEval eval;

  for (const StepSample* sample : batch) {
    const auto probs = policy.step_probs(sample->question_id, static_cast<size_t>(sample->step),
                                         sample->mask);
    const size_t action = static_cast<size_t>(sample->action);
    if (probs[action] <= 0.0) throw std::logic_error("eval_batch: recorded action is masked");
    const double logp_new = std::log(probs[action]);

    // clipped surrogate
    const double ratio = std::exp(logp_new - sample->logp_behavior);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range);
    const double unclipped_term = ratio * sample->advantage;
    const double clipped_term = clipped * sample->advantage;
    eval.policy_loss += -std::min(unclipped_term, clipped_term) / m;
    const bool pg_flows = unclipped_term <= clipped_term ||
                          (ratio >= 1.0 - cfg.clip_range && ratio <= 1.0 + cfg.clip_range);

    // entropy over the available actions
    double entropy = 0.0;
    for (double p : probs) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    eval.entropy += entropy / m;

    // clipped value loss
    const double v = values.values.at(sample->question_id)[static_cast<size_t>(sample->step)];
    const double v_clip =
        sample->value_old +
        std::clamp(v - sample->value_old, -cfg.clip_range_value, cfg.clip_range_value);
    const double err = v - sample->ret;
    const double err_clip = v_clip - sample->ret;
    const bool unclipped_vf = err * err >= err_clip * err_clip;
    eval.value_loss += 0.5 * std::max(err * err, err_clip * err_clip) / m;

    if (grads != nullptr) {
      auto& z_grad = grads->logits[sample->question_id];
      if (z_grad.empty())
        z_grad.assign(policy.step_count(sample->question_id),
                      std::vector<double>(policy.action_count(sample->question_id), 0.0));
      auto& row = z_grad[static_cast<size_t>(sample->step)];

      for (size_t b = 0; b < probs.size(); ++b) {
        if (sample->mask & (1u << b)) continue;
        const double dlogp = ((b == action ? 1.0 : 0.0) - probs[b]) / temp;
        if (pg_flows) row[b] += -(sample->advantage * ratio * dlogp) / m;
        if (cfg.entropy_coef > 0.0 && probs[b] > 0.0) {
          const double dentropy = -(probs[b] / temp) * (std::log(probs[b]) + entropy);
          row[b] += -cfg.entropy_coef * dentropy / m;
        }
      }

      auto& v_grad = grads->values[sample->question_id];
      if (v_grad.empty()) v_grad.assign(values.values.at(sample->question_id).size(), 0.0);
      double dv = 0.0;
      if (unclipped_vf) {
        dv = err;
      } else if (std::abs(v - sample->value_old) < cfg.clip_range_value) {
        dv = err_clip;
      }
      v_grad[static_cast<size_t>(sample->step)] += cfg.vf_coef * dv / m;
    }
  }

  eval.total_loss = eval.policy_loss + cfg.vf_coef * eval.value_loss - cfg.entropy_coef * eval.entropy;
  if (!std::isfinite(eval.total_loss))
    throw std::runtime_error("PPO surrogate became non-finite (policy_loss=" +
                             std::to_string(eval.policy_loss) +
                             ", value_loss=" + std::to_string(eval.value_loss) + ")");
  return eval;
}

std::vector<const StepSample*> to_pointers(const std::vector<StepSample>& samples) {
  std::vector<const StepSample*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& s : samples) ptrs.push_back(&s);
  return ptrs;
}

}  // namespace

double surrogate_loss(const TabularPolicy& policy, const ValueTable& values,
                      const std::vector<StepSample>& samples, const PPOConfig& cfg) {
  const auto ptrs = to_pointers(samples);
  return eval_batch(policy, values, ptrs, cfg, nullptr).total_loss;
}

GradientTables surrogate_gradients(const TabularPolicy& policy, const ValueTable& values,
                                   const std::vector<StepSample>& samples, const PPOConfig& cfg) {
  GradientTables grads;
  const auto ptrs = to_pointers(samples);
  eval_batch(policy, values, ptrs, cfg, &grads);
  return grads;
}

PpoUpdateResult ppo_update(TabularPolicy policy, ValueTable values,
                           const std::vector<StepSample>& samples, const PPOConfig& cfg,
                           uint64_t shuffle_seed) {
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("ppo_update: no samples");

  std::vector<const StepSample*> order = to_pointers(samples);
  LossReport report;
  size_t steps_taken = 0;

  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    Rng rng(mix_seed(shuffle_seed, static_cast<uint64_t>(epoch)));
    rng.shuffle(order);

    const size_t n = order.size();
    const size_t chunks = static_cast<size_t>(cfg.minibatches);
    size_t offset = 0;
    for (size_t c = 0; c < chunks && offset < n; ++c) {
      const size_t size = n / chunks + (c < n % chunks ? 1 : 0);
      if (size == 0) continue;
      std::span<const StepSample* const> batch(order.data() + offset, size);
      offset += size;

      GradientTables grads;
      const BatchEval eval = eval_batch(policy, values, batch, cfg, &grads);

      for (const auto& [qid, rows] : grads.logits) {
        auto& z = policy.logits().at(qid);
        for (size_t step = 0; step < rows.size(); ++step) {
          for (size_t a = 0; a < rows[step].size(); ++a)
            z[step][a] -= cfg.learning_rate * rows[step][a];
        }
      }
      for (const auto& [qid, row] : grads.values) {
        auto& v = values.values.at(qid);
        for (size_t step = 0; step < row.size(); ++step)
          v[step] -= cfg.learning_rate * row[step];
      }

      report.policy_loss += eval.policy_loss;
      report.value_loss += eval.value_loss;
      report.entropy += eval.entropy;
      report.total_loss += eval.total_loss;
      ++steps_taken;
    }
  }

  report.policy_loss /= static_cast<double>(steps_taken);
  report.value_loss /= static_cast<double>(steps_taken);
  report.entropy /= static_cast<double>(steps_taken);
  report.total_loss /= static_cast<double>(steps_taken);
  return {std::move(policy), std::move(values), report};
}

namespace {

json losses_json(const LossReport& losses) {
  return json{{"policy", losses.policy_loss},
              {"value", losses.value_loss},
              {"entropy", losses.entropy},
              {"total", losses.total_loss}};
}

json group_map_json(const std::map<GroupId, double>& m) {
  json j = json::object();
  for (const auto& [g, v] : m) j[g.name()] = v;
  return j;
}

}  // namespace

TrainResult train(TabularPolicy policy, ValueTable values, FederationTransport& transport,
                  const std::vector<Question>& rollout_questions, const TrainOptions& opts,
                  std::ostream* training_log, std::ostream* diagnostics) {
  opts.ppo.validate();
  opts.appa.validate();
  if (opts.iterations < 0) throw std::invalid_argument("train: negative iteration count");
  for (const auto& q : rollout_questions) {
    if (!policy.logits().count(q.id))
      throw std::invalid_argument("train: policy does not cover question " + q.id);
  }

  const TabularPolicy reference = policy;  // frozen at initialization
  AggregationState state = AggregationState::initial(transport.group_ids());

  TrainResult result{std::move(policy), std::move(values), state, {}};
  for (int64_t t = 1; t <= opts.iterations; ++t) {
    const uint64_t iter_seed = mix_seed(opts.seed, static_cast<uint64_t>(t));

    RolloutResult ro = rollout(result.policy, reference, result.values, rollout_questions,
                               mix_seed(iter_seed, "rollout"));
    ro.broadcast.iteration = t;

    RoundResult round =
        run_round(transport, ro.broadcast, opts.strategy, std::move(state), opts.appa);

    std::vector<double> terminal = round.aggregated;
    if (opts.ppo.whiten_rewards && opts.ppo.whiten_before_shaping)
      terminal = whiten_and_clamp(std::move(terminal), opts.ppo);
    for (size_t i = 0; i < ro.trajectories.size(); ++i)
      ro.trajectories[i].terminal_reward = terminal[i];

    const std::vector<StepSample> samples = build_samples(ro.trajectories, opts.ppo);
    PpoUpdateResult update = ppo_update(std::move(result.policy), std::move(result.values),
                                        samples, opts.ppo, mix_seed(iter_seed, "shuffle"));
    result.policy = std::move(update.policy);
    result.values = std::move(update.values);

    double mean_kl = 0.0;
    size_t step_count = 0;
    for (const auto& traj : ro.trajectories) {
      for (const auto& s : traj.steps) {
        mean_kl += s.logp_behavior - s.logp_ref;
        ++step_count;
      }
    }
    mean_kl /= static_cast<double>(step_count);

    // per Algorithm order the fairness state advances after the PPO update
    state = std::move(round.state);

    IterationRecord rec;
    rec.iteration = t;
    rec.fi = state.last_fi;
    rec.alpha = state.weights;
    rec.mean_reward = group_mean_rewards(round.matrix);
    rec.losses = update.losses;
    rec.mean_kl = mean_kl;

    if (training_log != nullptr) {
      json j{{"iteration", rec.iteration},
             {"fi", rec.fi},
             {"alpha", group_map_json(rec.alpha)},
             {"mean_reward", group_map_json(rec.mean_reward)},
             {"losses", losses_json(rec.losses)},
             {"mean_kl", rec.mean_kl}};
      *training_log << j.dump() << "\n";
    }
    if (diagnostics != nullptr) {
      json j{{"iteration", rec.iteration},
             {"fi", rec.fi},
             {"h", [&] {
                json h = json::object();
                for (const auto& [g, v] : state.histories) h[g.name()] = v;
                return h;
              }()},
             {"alpha", group_map_json(state.weights)}};
      *diagnostics << j.dump() << "\n";
    }
    result.log.push_back(std::move(rec));
  }
  result.agg_state = std::move(state);
  return result;
}

void save_checkpoint(const TabularPolicy& policy, const ValueTable& values, std::ostream& out) {
  json j = json::object();
  j["meta/task"] = to_string(policy.task());
  j["meta/bins"] = policy.bins();
  j["meta/temperature"] = policy.temperature();
  for (const auto& [qid, rows] : policy.logits()) {
    for (size_t step = 0; step < rows.size(); ++step)
      j["logits/" + qid + "/" + std::to_string(step)] = rows[step];
  }
  for (const auto& [qid, row] : values.values) j["values/" + qid] = row;
  out << j.dump(2) << "\n";
}

std::pair<TabularPolicy, ValueTable> load_checkpoint(std::istream& in) {
  json j = json::parse(in);
  const TaskMode task = task_mode_from_string(j.at("meta/task").get<std::string>());
  const int bins = j.at("meta/bins").get<int>();
  const double temperature = j.at("meta/temperature").get<double>();

  std::map<std::string, std::map<size_t, std::vector<double>>> rows_by_qid;
  ValueTable values;
  for (const auto& [key, value] : j.items()) {
    if (key.starts_with("logits/")) {
      const size_t slash = key.rfind('/');
      const std::string qid = key.substr(7, slash - 7);
      const size_t step = std::stoul(key.substr(slash + 1));
      rows_by_qid[qid][step] = value.get<std::vector<double>>();
    } else if (key.starts_with("values/")) {
      values.values[key.substr(7)] = value.get<std::vector<double>>();
    }
  }
  std::map<std::string, std::vector<std::vector<double>>> logits;
  for (auto& [qid, rows] : rows_by_qid) {
    std::vector<std::vector<double>> table(rows.size());
    for (auto& [step, row] : rows) {
      if (step >= table.size()) throw std::invalid_argument("checkpoint: step gap in " + qid);
      table[step] = std::move(row);
    }
    logits.emplace(qid, std::move(table));
  }
  return {TabularPolicy::from_tables(task, bins, temperature, std::move(logits)),
          std::move(values)};
}

}  // namespace appa
