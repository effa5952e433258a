#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "appa/aggregation.hpp"
#include "appa/domain.hpp"
#include "appa/federation.hpp"
#include "appa/rng.hpp"

namespace appa {

struct PPOConfig {
  double kl_coef = 0.05;          // beta, per-step KL shaping against the reference
  double clip_range = 0.2;        // epsilon
  double clip_range_value = 0.2;
  double vf_coef = 0.2;           // c1
  double entropy_coef = 0.0;      // c2
  double gamma = 1.0;
  double gae_lambda = 0.95;
  int ppo_epochs = 2;
  int minibatches = 8;
  double learning_rate = 1e-5;
  double reward_clamp = 5.0;
  // whiten the terminal aggregated rewards before KL shaping (default) or
  // whiten the shaped per-step rewards instead
  bool whiten_before_shaping = true;
  // disable whitening entirely; single-item batches otherwise carry no signal
  bool whiten_rewards = true;

  void validate() const;
};

// Desk-scale stand-in for the LLM policy: per-question logit tables decoded
// step by step. DPA assigns each option a weight from a B-bin grid and
// renormalizes; OPA picks one unchosen option per step.
class TabularPolicy {
 public:
  static TabularPolicy make(TaskMode task, const std::vector<Question>& questions, int bins = 11,
                            double temperature = 0.6);
  static TabularPolicy from_tables(TaskMode task, int bins, double temperature,
                                   std::map<std::string, std::vector<std::vector<double>>> logits);

  TaskMode task() const { return task_; }
  int bins() const { return bins_; }
  double temperature() const { return temperature_; }

  size_t step_count(const std::string& qid) const;
  size_t action_count(const std::string& qid) const;

  // Tempered softmax over unmasked actions; mask bits name excluded options.
  std::vector<double> step_probs(const std::string& qid, size_t step, uint32_t mask) const;
  double log_prob(const std::string& qid, size_t step, uint32_t mask, int action) const;
  int greedy_action(const std::string& qid, size_t step, uint32_t mask) const;

  double grid_weight(int bin) const;  // DPA bin -> weight in [0,1]

  std::map<std::string, std::vector<std::vector<double>>>& logits() { return logits_; }
  const std::map<std::string, std::vector<std::vector<double>>>& logits() const { return logits_; }

  bool operator==(const TabularPolicy&) const = default;

 private:
  TaskMode task_ = TaskMode::Dpa;
  int bins_ = 11;
  double temperature_ = 0.6;
  std::map<std::string, std::vector<std::vector<double>>> logits_;  // qid -> [step][action]
};

struct ValueTable {
  std::map<std::string, std::vector<double>> values;  // qid -> per-step baseline

  static ValueTable zeros(const std::vector<Question>& questions);
  bool operator==(const ValueTable&) const = default;
};

struct TrajectoryStep {
  int action = 0;
  uint32_t mask = 0;  // options already chosen before this step (OPA only)
  double logp_behavior = 0.0;
  double logp_ref = 0.0;
  double value = 0.0;
};

// One episode per question: K primitive actions and a single terminal reward.
struct Trajectory {
  std::string question_id;
  std::vector<TrajectoryStep> steps;
  double terminal_reward = 0.0;
};

struct RolloutResult {
  std::vector<Trajectory> trajectories;
  RolloutBroadcast broadcast;
};

// Samples one episode per question (deterministic in the seed), serializing
// each emitted answer into the task's response grammar.
RolloutResult rollout(const TabularPolicy& policy, const TabularPolicy& reference,
                      const ValueTable& values, const std::vector<Question>& questions,
                      uint64_t seed);

// Argmax decoding of one question; used for evaluation.
std::string greedy_response(const TabularPolicy& policy, const Question& question);
std::string sampled_response(const TabularPolicy& policy, const Question& question, Rng& rng);

// -beta * (logp_policy - logp_ref) at every step, terminal reward added on
// the final step.
std::vector<double> shape_rewards(const Trajectory& traj, double beta);

// Whiten over the batch (population std; all zeros when std ~ 0), then clamp
// to +-reward_clamp.
std::vector<double> whiten_and_clamp(std::vector<double> rewards, const PPOConfig& cfg);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma V_{t+1} - V_t with terminal bootstrap 0;
// A_t = delta_t + gamma lambda A_{t+1}; returns = A + V.
GaeResult gae(std::span<const double> rewards, std::span<const double> values, double gamma,
              double lambda);

struct StepSample {
  std::string question_id;
  int step = 0;
  int action = 0;
  uint32_t mask = 0;
  double logp_behavior = 0.0;
  double value_old = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
};

// Shapes rewards and runs GAE per trajectory, flattening to per-step samples.
std::vector<StepSample> build_samples(const std::vector<Trajectory>& trajectories,
                                      const PPOConfig& cfg);

struct LossReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total_loss = 0.0;
};

struct PpoUpdateResult {
  TabularPolicy policy;
  ValueTable values;
  LossReport losses;
};

// Clipped-surrogate PPO with a clipped value loss and entropy bonus, plain
// gradient descent on the tabular parameters over ppo_epochs x minibatches.
PpoUpdateResult ppo_update(TabularPolicy policy, ValueTable values,
                           const std::vector<StepSample>& samples, const PPOConfig& cfg,
                           uint64_t shuffle_seed);

// Exposed for the finite-difference gradient checks.
double surrogate_loss(const TabularPolicy& policy, const ValueTable& values,
                      const std::vector<StepSample>& samples, const PPOConfig& cfg);

struct GradientTables {
  std::map<std::string, std::vector<std::vector<double>>> logits;
  std::map<std::string, std::vector<double>> values;
};

GradientTables surrogate_gradients(const TabularPolicy& policy, const ValueTable& values,
                                   const std::vector<StepSample>& samples, const PPOConfig& cfg);

struct IterationRecord {
  int64_t iteration = 0;
  double fi = 1.0;
  std::map<GroupId, double> alpha;
  std::map<GroupId, double> mean_reward;  // raw per-group means as received
  LossReport losses;
  double mean_kl = 0.0;
};

struct TrainOptions {
  AggregationStrategy strategy = AverageStrategy{};
  AppaConfig appa{};
  PPOConfig ppo{};
  int iterations = 0;
  uint64_t seed = 0;
};

struct TrainResult {
  TabularPolicy policy;
  ValueTable values;
  AggregationState agg_state;
  std::vector<IterationRecord> log;
};

// Full training loop: rollout, federated round, whiten, shape, GAE, PPO
// update, history update. Appends one JSON object per iteration to the
// optional training-log and state-diagnostics streams.
TrainResult train(TabularPolicy policy, ValueTable values, FederationTransport& transport,
                  const std::vector<Question>& rollout_questions, const TrainOptions& opts,
                  std::ostream* training_log = nullptr, std::ostream* diagnostics = nullptr);

// Checkpoints hold every table as a flat JSON map.
void save_checkpoint(const TabularPolicy& policy, const ValueTable& values, std::ostream& out);
std::pair<TabularPolicy, ValueTable> load_checkpoint(std::istream& in);

}  // namespace appa
