#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "appa/aggregation.hpp"
#include "appa/domain.hpp"
#include "appa/metrics.hpp"
#include "appa/parsing.hpp"
#include "appa/policy.hpp"

namespace appa {

// Synthetic stand-in for the survey corpora: per question a base target plus
// per-group mixtures (1-eta) * base + eta * group draw.
struct GeneratorSpec {
  int groups = 2;
  int questions = 10;
  int k_min = 3;
  int k_max = 6;
  double heterogeneity = 0.5;  // eta in [0,1]; 0 = identical groups, 1 = independent
  uint64_t seed = 0;

  void validate() const;
};

PreferenceDataset generate_dataset(const GeneratorSpec& spec, double split_ratio = 0.8);

// Newline-delimited JSON, one question per line:
//   {"question_id": str, "options": [str], "targets": {group: [probs]}}
void save_dataset_ndjson(const PreferenceDataset& dataset, std::ostream& out);
// Accepts target sums within [1-1e-3, 1+1e-3] (renormalized), rejects otherwise.
PreferenceDataset load_dataset_ndjson(std::istream& in, double split_ratio, uint64_t split_seed);

struct ExperimentConfig {
  std::optional<std::string> dataset_path;  // exactly one of path / generator
  std::optional<GeneratorSpec> generator;
  TaskMode task_mode = TaskMode::Dpa;
  MetricKind metric = MetricKind::Js;
  std::string strategy = "appa";
  AppaConfig appa{};
  PPOConfig ppo{};
  int iterations = 50;
  double split_ratio = 0.8;
  uint64_t seed = 0;
  double omega = kDefaultOmega;
  int grid_bins = 11;
  double sampling_temperature = 0.6;
  std::string out_dir;
  std::string transport = "inproc";  // inproc | tcp
  uint16_t tcp_port = 0;             // 0 picks a free port
  bool tcp_external = false;         // wait for standalone clients instead of spawning local ones
  bool eval_sampling = false;        // sample instead of greedy decoding at evaluation
  std::string rollout_split = "all";  // all | train: questions rolled out while training

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config_file(const std::string& path);

struct EvaluationReport {
  std::map<GroupId, double> per_group_as;  // spider values
  double avg_as = 0.0;
  double min_as = 0.0;
  double fi = 1.0;  // Fairness Index of the raw metric rewards on the test set
  double mean_format_score = 0.0;
};

nlohmann::json evaluation_report_json(const EvaluationReport& report);

// Mean raw metric reward of one group over the test split (no format
// blending). Outputs must cover every test question; empty test split errors.
double group_alignment_score(const std::map<std::string, std::string>& outputs,
                             const PreferenceDataset& dataset, const GroupId& group,
                             MetricKind metric);

// (mean, min) over the per-group alignment scores.
std::pair<double, double> summarize(const std::map<GroupId, double>& per_group_as);

// Decode responses for the test split (greedy by default).
std::map<std::string, std::string> decode_test_outputs(const TabularPolicy& policy,
                                                       const PreferenceDataset& dataset,
                                                       bool sampling = false, uint64_t seed = 0);

EvaluationReport evaluate_policy(const TabularPolicy& policy, const PreferenceDataset& dataset,
                                 MetricKind metric, const AppaConfig& appa_cfg,
                                 bool sampling = false, uint64_t seed = 0);

struct RunArtifacts {
  TrainResult train;
  EvaluationReport eval;
};

// One full experiment: build dataset, clients and transport from the config,
// train, evaluate on the held-out split, and (when out_dir is set) write
// training_log.ndjson, diagnostics.ndjson, checkpoint.json, eval_report.json.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

struct ComparisonRow {
  std::string strategy;
  uint64_t seed = 0;
  MetricKind metric = MetricKind::Js;
  double fi = 0.0;
  double avg_as = 0.0;
  double min_as = 0.0;
  double format_score = 0.0;
};

struct StrategySummary {
  std::string strategy;
  double fi_mean = 0.0, fi_range = 0.0;
  double avg_as_mean = 0.0, avg_as_range = 0.0;
  double min_as_mean = 0.0, min_as_range = 0.0;
  double format_mean = 0.0;
  std::map<GroupId, double> spider;  // per-group AS averaged over seeds
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  std::vector<StrategySummary> summaries;
};

// Trains one policy per (strategy, seed) from a shared initial policy and
// evaluates each on the held-out split. Each seed derives its own dataset
// draw from the template's generator seed.
ComparisonResult compare_strategies(const ExperimentConfig& tpl,
                                    const std::vector<std::string>& strategies,
                                    const std::vector<uint64_t>& seeds);

void write_comparison_csv(const ComparisonResult& result, std::ostream& out);
nlohmann::json comparison_json(const ComparisonResult& result);

// Reassembles the per-iteration alpha / FI / history traces from a
// diagnostics NDJSON stream into one JSON document for plotting.
nlohmann::json weight_trace_from_ndjson(std::istream& diagnostics);

}  // namespace appa
