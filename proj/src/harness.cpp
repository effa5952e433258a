#include "appa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "appa/federation.hpp"
#include "appa/rng.hpp"
#include "appa/wire.hpp"

namespace appa {

using nlohmann::json;

void GeneratorSpec::validate() const {
  if (groups < 1) throw std::invalid_argument("GeneratorSpec: need at least one group");
  if (questions < 1) throw std::invalid_argument("GeneratorSpec: need at least one question");
  if (k_min < 2 || k_max < k_min) throw std::invalid_argument("GeneratorSpec: bad option range");
  if (k_max > 26) throw std::invalid_argument("GeneratorSpec: at most 26 options (letter labels)");
  if (heterogeneity < 0.0 || heterogeneity > 1.0)
    throw std::invalid_argument("GeneratorSpec: heterogeneity outside [0,1]");
}

namespace {

// Simplex draw concentrated toward the corners, like real survey responses
// that cluster on one or two options. Exponent 1 would be flat (uniform
// Dirichlet); 3 makes most questions carry a clear majority option.
constexpr double kTargetSharpness = 2.5;

std::vector<double> sharp_simplex_draw(Rng& rng, size_t k) {
  std::vector<double> draw(k);
  double total = 0.0;
  for (double& v : draw) {
    v = std::pow(-std::log(1.0 - rng.uniform()), kTargetSharpness);
    total += v;
  }
  for (double& v : draw) v /= total;
  return draw;
}

DatasetSplit make_split(std::vector<std::string> ids, double ratio, uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio outside (0,1)");
  Rng rng(mix_seed(seed, "split"));
  rng.shuffle(ids);
  size_t n_train = static_cast<size_t>(std::lround(ratio * static_cast<double>(ids.size())));
  n_train = std::clamp<size_t>(n_train, 1, ids.size());
  if (ids.size() >= 2) n_train = std::min(n_train, ids.size() - 1);
  DatasetSplit split;
  split.train_ids.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
  split.test_ids.assign(ids.begin() + static_cast<long>(n_train), ids.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

std::string letter_label(size_t i) { return std::string(1, static_cast<char>('A' + i)); }

}  // namespace

PreferenceDataset generate_dataset(const GeneratorSpec& spec, double split_ratio) {
  spec.validate();
  std::vector<GroupId> groups;
  for (int g = 0; g < spec.groups; ++g) groups.emplace_back("group" + std::to_string(g + 1));

  std::vector<Question> questions;
  std::map<std::pair<std::string, std::string>, ProbDistribution> targets;
  std::vector<std::string> ids;
  for (int q = 0; q < spec.questions; ++q) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "q%04d", q + 1);
    const std::string qid(buf);
    Rng rng(mix_seed(spec.seed, qid));

    const size_t k = static_cast<size_t>(spec.k_min) +
                     rng.below(static_cast<uint64_t>(spec.k_max - spec.k_min + 1));
    std::vector<std::string> labels(k);
    for (size_t i = 0; i < k; ++i) labels[i] = letter_label(i);
    questions.push_back(Question{qid, labels});
    ids.push_back(qid);

    const std::vector<double> base = sharp_simplex_draw(rng, k);
    for (const auto& group : groups) {
      const std::vector<double> own = sharp_simplex_draw(rng, k);
      std::vector<double> mixed(k);
      for (size_t i = 0; i < k; ++i)
        mixed[i] = (1.0 - spec.heterogeneity) * base[i] + spec.heterogeneity * own[i];
      targets.emplace(std::make_pair(group.name(), qid),
                      ProbDistribution::renormalized(std::move(mixed)));
    }
  }
  return PreferenceDataset(std::move(questions), std::move(groups), std::move(targets),
                           make_split(std::move(ids), split_ratio, spec.seed));
}

void save_dataset_ndjson(const PreferenceDataset& dataset, std::ostream& out) {
  for (const auto& q : dataset.questions()) {
    json targets = json::object();
    for (const auto& g : dataset.groups())
      targets[g.name()] = dataset.target(g, q.id).probs();
    json line{{"question_id", q.id}, {"options", q.option_labels}, {"targets", targets}};
    out << line.dump() << "\n";
  }
}

PreferenceDataset load_dataset_ndjson(std::istream& in, double split_ratio, uint64_t split_seed) {
  std::vector<Question> questions;
  std::map<std::pair<std::string, std::string>, ProbDistribution> targets;
  std::vector<GroupId> groups;
  std::vector<std::string> ids;
  bool first = true;

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": bad JSON");
    Question q{j.at("question_id").get<std::string>(),
               j.at("options").get<std::vector<std::string>>()};
    q.validate();

    const auto& target_obj = j.at("targets");
    std::vector<GroupId> line_groups;
    for (const auto& [name, probs_json] : target_obj.items()) {
      line_groups.emplace_back(name);
      std::vector<double> probs = probs_json.get<std::vector<double>>();
      double sum = 0.0;
      for (double p : probs) sum += p;
      if (sum < 1.0 - 1e-3 || sum > 1.0 + 1e-3)
        throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": target for " +
                                    name + " sums to " + std::to_string(sum));
      targets.emplace(std::make_pair(name, q.id), ProbDistribution::renormalized(std::move(probs)));
    }
    std::sort(line_groups.begin(), line_groups.end());
    if (first) {
      groups = line_groups;
      first = false;
    } else if (groups != line_groups) {
      throw std::invalid_argument("dataset line " + std::to_string(line_no) +
                                  ": inconsistent group set");
    }
    ids.push_back(q.id);
    questions.push_back(std::move(q));
  }
  if (questions.empty()) throw std::invalid_argument("dataset file is empty");
  return PreferenceDataset(std::move(questions), std::move(groups), std::move(targets),
                           make_split(std::move(ids), split_ratio, split_seed));
}

void ExperimentConfig::validate() const {
  if (dataset_path.has_value() == generator.has_value())
    throw std::invalid_argument("config: exactly one of dataset path / generator required");
  if (generator) generator->validate();
  if (!metric_applies_to(metric, task_mode))
    throw std::invalid_argument("config: metric " + to_string(metric) +
                                " does not apply to task " + to_string(task_mode));
  strategy_from_string(strategy);  // throws on unknown
  appa.validate();
  ppo.validate();
  if (iterations < 0) throw std::invalid_argument("config: negative iterations");
  if (!(split_ratio > 0.0 && split_ratio < 1.0))
    throw std::invalid_argument("config: split ratio outside (0,1)");
  if (omega < 0.0 || omega > 1.0) throw std::invalid_argument("config: omega outside [0,1]");
  if (grid_bins < 2) throw std::invalid_argument("config: grid_bins must be >= 2");
  if (!(sampling_temperature > 0.0))
    throw std::invalid_argument("config: sampling_temperature must be > 0");
  if (transport != "inproc" && transport != "tcp")
    throw std::invalid_argument("config: unknown transport " + transport);
  if (rollout_split != "all" && rollout_split != "train")
    throw std::invalid_argument("config: rollout_split must be all or train");
}

namespace {

template <typename T>
void maybe_get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("dataset_path")) cfg.dataset_path = j.at("dataset_path").get<std::string>();
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    GeneratorSpec spec;
    maybe_get(g, "groups", spec.groups);
    maybe_get(g, "questions", spec.questions);
    maybe_get(g, "k_min", spec.k_min);
    maybe_get(g, "k_max", spec.k_max);
    maybe_get(g, "heterogeneity", spec.heterogeneity);
    maybe_get(g, "seed", spec.seed);
    cfg.generator = spec;
  }
  if (j.contains("task_mode")) cfg.task_mode = task_mode_from_string(j.at("task_mode").get<std::string>());
  if (j.contains("metric")) cfg.metric = metric_from_string(j.at("metric").get<std::string>());
  maybe_get(j, "strategy", cfg.strategy);
  if (j.contains("appa")) {
    const json& a = j.at("appa");
    maybe_get(a, "lambda_ema", cfg.appa.lambda_ema);
    maybe_get(a, "temperature", cfg.appa.temperature);
    maybe_get(a, "tau", cfg.appa.tau);
    maybe_get(a, "mu_min", cfg.appa.mu_min);
    maybe_get(a, "cov_max", cfg.appa.cov_max);
  }
  if (j.contains("ppo")) {
    const json& p = j.at("ppo");
    maybe_get(p, "kl_coef", cfg.ppo.kl_coef);
    maybe_get(p, "clip_range", cfg.ppo.clip_range);
    maybe_get(p, "clip_range_value", cfg.ppo.clip_range_value);
    maybe_get(p, "vf_coef", cfg.ppo.vf_coef);
    maybe_get(p, "entropy_coef", cfg.ppo.entropy_coef);
    maybe_get(p, "gamma", cfg.ppo.gamma);
    maybe_get(p, "gae_lambda", cfg.ppo.gae_lambda);
    maybe_get(p, "ppo_epochs", cfg.ppo.ppo_epochs);
    maybe_get(p, "minibatches", cfg.ppo.minibatches);
    maybe_get(p, "learning_rate", cfg.ppo.learning_rate);
    maybe_get(p, "reward_clamp", cfg.ppo.reward_clamp);
    maybe_get(p, "whiten_before_shaping", cfg.ppo.whiten_before_shaping);
    maybe_get(p, "whiten_rewards", cfg.ppo.whiten_rewards);
  }
  maybe_get(j, "iterations", cfg.iterations);
  maybe_get(j, "split_ratio", cfg.split_ratio);
  maybe_get(j, "seed", cfg.seed);
  maybe_get(j, "omega", cfg.omega);
  maybe_get(j, "grid_bins", cfg.grid_bins);
  maybe_get(j, "sampling_temperature", cfg.sampling_temperature);
  maybe_get(j, "out_dir", cfg.out_dir);
  maybe_get(j, "transport", cfg.transport);
  if (j.contains("tcp_port")) cfg.tcp_port = static_cast<uint16_t>(j.at("tcp_port").get<int>());
  maybe_get(j, "tcp_external", cfg.tcp_external);
  maybe_get(j, "eval_sampling", cfg.eval_sampling);
  maybe_get(j, "rollout_split", cfg.rollout_split);
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  if (cfg.dataset_path) j["dataset_path"] = *cfg.dataset_path;
  if (cfg.generator) {
    j["generator"] = json{{"groups", cfg.generator->groups},
                          {"questions", cfg.generator->questions},
                          {"k_min", cfg.generator->k_min},
                          {"k_max", cfg.generator->k_max},
                          {"heterogeneity", cfg.generator->heterogeneity},
                          {"seed", cfg.generator->seed}};
  }
  j["task_mode"] = to_string(cfg.task_mode);
  j["metric"] = to_string(cfg.metric);
  j["strategy"] = cfg.strategy;
  j["appa"] = json{{"lambda_ema", cfg.appa.lambda_ema},
                   {"temperature", cfg.appa.temperature},
                   {"tau", cfg.appa.tau},
                   {"mu_min", cfg.appa.mu_min},
                   {"cov_max", cfg.appa.cov_max}};
  j["ppo"] = json{{"kl_coef", cfg.ppo.kl_coef},
                  {"clip_range", cfg.ppo.clip_range},
                  {"clip_range_value", cfg.ppo.clip_range_value},
                  {"vf_coef", cfg.ppo.vf_coef},
                  {"entropy_coef", cfg.ppo.entropy_coef},
                  {"gamma", cfg.ppo.gamma},
                  {"gae_lambda", cfg.ppo.gae_lambda},
                  {"ppo_epochs", cfg.ppo.ppo_epochs},
                  {"minibatches", cfg.ppo.minibatches},
                  {"learning_rate", cfg.ppo.learning_rate},
                  {"reward_clamp", cfg.ppo.reward_clamp},
                  {"whiten_before_shaping", cfg.ppo.whiten_before_shaping},
                  {"whiten_rewards", cfg.ppo.whiten_rewards}};
  j["iterations"] = cfg.iterations;
  j["split_ratio"] = cfg.split_ratio;
  j["seed"] = cfg.seed;
  j["omega"] = cfg.omega;
  j["grid_bins"] = cfg.grid_bins;
  j["sampling_temperature"] = cfg.sampling_temperature;
  j["out_dir"] = cfg.out_dir;
  j["transport"] = cfg.transport;
  j["tcp_port"] = cfg.tcp_port;
  j["tcp_external"] = cfg.tcp_external;
  j["eval_sampling"] = cfg.eval_sampling;
  j["rollout_split"] = cfg.rollout_split;
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  return config_from_json(json::parse(in));
}

json evaluation_report_json(const EvaluationReport& report) {
  json per_group = json::object();
  for (const auto& [g, v] : report.per_group_as) per_group[g.name()] = v;
  return json{{"per_group_as", per_group},
              {"avg_as", report.avg_as},
              {"min_as", report.min_as},
              {"fi", report.fi},
              {"mean_format_score", report.mean_format_score}};
}

namespace {

// Raw metric reward of one response against one target; unparseable earns 0.
double raw_metric_reward(const std::string& response, const Question& question,
                         const ProbDistribution& target, MetricKind metric) {
  const TaskMode mode = metric == MetricKind::Borda ? TaskMode::Opa : TaskMode::Dpa;
  return item_metric_reward(metric, make_rollout_item(question, mode, response), target);
}

}  // namespace

double group_alignment_score(const std::map<std::string, std::string>& outputs,
                             const PreferenceDataset& dataset, const GroupId& group,
                             MetricKind metric) {
  const auto& test_ids = dataset.split().test_ids;
  if (test_ids.empty()) throw std::invalid_argument("group_alignment_score: empty test split");
  double total = 0.0;
  for (const auto& qid : test_ids) {
    auto it = outputs.find(qid);
    if (it == outputs.end())
      throw std::invalid_argument("group_alignment_score: missing output for " + qid);
    total += raw_metric_reward(it->second, dataset.question(qid), dataset.target(group, qid), metric);
  }
  return total / static_cast<double>(test_ids.size());
}

std::pair<double, double> summarize(const std::map<GroupId, double>& per_group_as) {
  if (per_group_as.empty()) throw std::invalid_argument("summarize: empty map");
  double sum = 0.0;
  double min_v = std::numeric_limits<double>::infinity();
  for (const auto& [g, v] : per_group_as) {
    sum += v;
    min_v = std::min(min_v, v);
  }
  return {sum / static_cast<double>(per_group_as.size()), min_v};
}

std::map<std::string, std::string> decode_test_outputs(const TabularPolicy& policy,
                                                       const PreferenceDataset& dataset,
                                                       bool sampling, uint64_t seed) {
  std::map<std::string, std::string> outputs;
  for (const auto& qid : dataset.split().test_ids) {
    const Question& q = dataset.question(qid);
    if (sampling) {
      Rng rng(mix_seed(seed, qid));
      outputs.emplace(qid, sampled_response(policy, q, rng));
    } else {
      outputs.emplace(qid, greedy_response(policy, q));
    }
  }
  return outputs;
}

EvaluationReport evaluate_policy(const TabularPolicy& policy, const PreferenceDataset& dataset,
                                 MetricKind metric, const AppaConfig& appa_cfg, bool sampling,
                                 uint64_t seed) {
  const auto outputs = decode_test_outputs(policy, dataset, sampling, seed);
  const auto& test_ids = dataset.split().test_ids;
  if (test_ids.empty()) throw std::invalid_argument("evaluate_policy: empty test split");

  EvaluationReport report;
  for (const auto& g : dataset.groups())
    report.per_group_as.emplace(g, group_alignment_score(outputs, dataset, g, metric));
  std::tie(report.avg_as, report.min_as) = summarize(report.per_group_as);

  // evaluation-time FI over the raw per-question metric rewards (same Eq. 4
  // code path as training, fed by the unblended metric)
  std::vector<GroupId> groups = dataset.groups();
  std::sort(groups.begin(), groups.end());
  std::vector<double> values;
  values.reserve(groups.size() * test_ids.size());
  for (const auto& g : groups) {
    for (const auto& qid : test_ids)
      values.push_back(
          raw_metric_reward(outputs.at(qid), dataset.question(qid), dataset.target(g, qid), metric));
  }
  RewardMatrix matrix(0, groups, test_ids.size(), std::move(values));
  report.fi = fairness_index(matrix, appa_cfg);

  double format_sum = 0.0;
  const TaskMode mode = metric == MetricKind::Borda ? TaskMode::Opa : TaskMode::Dpa;
  for (const auto& qid : test_ids)
    format_sum += make_rollout_item(dataset.question(qid), mode, outputs.at(qid)).format_score;
  report.mean_format_score = format_sum / static_cast<double>(test_ids.size());
  return report;
}

namespace {

PreferenceDataset build_dataset(const ExperimentConfig& cfg) {
  if (cfg.generator) return generate_dataset(*cfg.generator, cfg.split_ratio);
  std::ifstream in(*cfg.dataset_path);
  if (!in) throw std::runtime_error("cannot open dataset " + *cfg.dataset_path);
  return load_dataset_ndjson(in, cfg.split_ratio, cfg.seed);
}

std::vector<Question> rollout_questions_for(const ExperimentConfig& cfg,
                                            const PreferenceDataset& dataset) {
  if (cfg.rollout_split == "train") {
    std::vector<Question> qs;
    for (const auto& qid : dataset.split().train_ids) qs.push_back(dataset.question(qid));
    return qs;
  }
  return dataset.questions();
}

RunArtifacts run_with_transport(const ExperimentConfig& cfg, const PreferenceDataset& dataset,
                                FederationTransport& transport) {
  TabularPolicy policy = TabularPolicy::make(cfg.task_mode, dataset.questions(), cfg.grid_bins,
                                             cfg.sampling_temperature);
  ValueTable values = ValueTable::zeros(dataset.questions());

  TrainOptions opts;
  opts.strategy = strategy_from_string(cfg.strategy);
  opts.appa = cfg.appa;
  opts.ppo = cfg.ppo;
  opts.iterations = cfg.iterations;
  opts.seed = cfg.seed;

  std::ofstream log_file, diag_file;
  std::ostream* log_stream = nullptr;
  std::ostream* diag_stream = nullptr;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    log_file.open(cfg.out_dir + "/training_log.ndjson");
    diag_file.open(cfg.out_dir + "/diagnostics.ndjson");
    log_stream = &log_file;
    diag_stream = &diag_file;
  }

  RunArtifacts artifacts{train(std::move(policy), std::move(values), transport,
                               rollout_questions_for(cfg, dataset), opts, log_stream, diag_stream),
                         {}};
  artifacts.eval = evaluate_policy(artifacts.train.policy, dataset, cfg.metric, cfg.appa,
                                   cfg.eval_sampling, mix_seed(cfg.seed, "eval"));

  if (!cfg.out_dir.empty()) {
    std::ofstream ckpt(cfg.out_dir + "/checkpoint.json");
    save_checkpoint(artifacts.train.policy, artifacts.train.values, ckpt);
    std::ofstream eval_out(cfg.out_dir + "/eval_report.json");
    eval_out << evaluation_report_json(artifacts.eval).dump(2) << "\n";
  }
  return artifacts;
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const PreferenceDataset dataset = build_dataset(cfg);

  std::vector<GroupClient> clients;
  for (const auto& g : dataset.groups())
    clients.push_back(GroupClient::from_dataset(dataset, g, cfg.metric, cfg.omega));

  if (cfg.transport == "inproc") {
    InProcessTransport transport(std::move(clients));
    return run_with_transport(cfg, dataset, transport);
  }

  // tcp: self-contained by default (clients on local threads); with
  // tcp_external the server just listens and standalone clients connect
  std::vector<GroupId> groups = dataset.groups();
  TcpFederationServer server(cfg.tcp_port, groups);
  std::vector<std::thread> workers;
  if (!cfg.tcp_external) {
    workers.reserve(clients.size());
    for (auto& client : clients) {
      workers.emplace_back([port = server.port(), c = std::move(client)] {
        run_group_client("127.0.0.1", port, c);
      });
    }
  } else {
    std::fprintf(stderr, "waiting for %zu group clients on port %u\n", groups.size(),
                 static_cast<unsigned>(server.port()));
  }
  try {
    server.wait_for_clients();
    RunArtifacts artifacts = run_with_transport(cfg, dataset, server);
    server.shutdown();
    for (auto& w : workers) w.join();
    return artifacts;
  } catch (...) {
    server.shutdown();
    for (auto& w : workers) {
      if (w.joinable()) w.join();
    }
    throw;
  }
}

ComparisonResult compare_strategies(const ExperimentConfig& tpl,
                                    const std::vector<std::string>& strategies,
                                    const std::vector<uint64_t>& seeds) {
  if (strategies.empty()) throw std::invalid_argument("compare_strategies: no strategies");
  if (seeds.empty()) throw std::invalid_argument("compare_strategies: no seeds");
  tpl.validate();

  ComparisonResult result;
  std::map<std::string, std::vector<ComparisonRow>> by_strategy;
  std::map<std::string, std::map<GroupId, double>> spider_sums;

  for (const uint64_t seed : seeds) {
    ExperimentConfig run_cfg = tpl;
    run_cfg.seed = seed;
    if (run_cfg.generator)
      run_cfg.generator->seed = mix_seed(tpl.generator->seed, seed);  // fresh dataset draw per seed
    for (const auto& strategy : strategies) {
      run_cfg.strategy = strategy;
      if (!tpl.out_dir.empty())
        run_cfg.out_dir = tpl.out_dir + "/runs/" + strategy + "-seed" + std::to_string(seed);
      const RunArtifacts artifacts = run_experiment(run_cfg);

      ComparisonRow row;
      row.strategy = strategy;
      row.seed = seed;
      row.metric = run_cfg.metric;
      row.fi = artifacts.eval.fi;
      row.avg_as = artifacts.eval.avg_as;
      row.min_as = artifacts.eval.min_as;
      row.format_score = artifacts.eval.mean_format_score;
      result.rows.push_back(row);
      by_strategy[strategy].push_back(row);
      for (const auto& [g, v] : artifacts.eval.per_group_as) spider_sums[strategy][g] += v;
    }
  }

  for (const auto& strategy : strategies) {
    const auto& rows = by_strategy.at(strategy);
    auto stat = [&](auto field) {
      double mn = std::numeric_limits<double>::infinity(), mx = -mn, sum = 0.0;
      for (const auto& r : rows) {
        const double v = field(r);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        sum += v;
      }
      return std::pair{sum / static_cast<double>(rows.size()), mx - mn};
    };
    StrategySummary s;
    s.strategy = strategy;
    std::tie(s.fi_mean, s.fi_range) = stat([](const ComparisonRow& r) { return r.fi; });
    std::tie(s.avg_as_mean, s.avg_as_range) = stat([](const ComparisonRow& r) { return r.avg_as; });
    std::tie(s.min_as_mean, s.min_as_range) = stat([](const ComparisonRow& r) { return r.min_as; });
    s.format_mean = stat([](const ComparisonRow& r) { return r.format_score; }).first;
    for (const auto& [g, sum] : spider_sums.at(strategy))
      s.spider.emplace(g, sum / static_cast<double>(seeds.size()));
    result.summaries.push_back(std::move(s));
  }
  return result;
}

void write_comparison_csv(const ComparisonResult& result, std::ostream& out) {
  out << "strategy,seed,metric,fi,avg_as,min_as,format_score\n";
  for (const auto& r : result.rows) {
    out << r.strategy << ',' << r.seed << ',' << to_string(r.metric) << ','
        << format_reward(r.fi) << ',' << format_reward(r.avg_as) << ','
        << format_reward(r.min_as) << ',' << format_reward(r.format_score) << "\n";
  }
}

json comparison_json(const ComparisonResult& result) {
  json summaries = json::array();
  for (const auto& s : result.summaries) {
    json spider = json::object();
    for (const auto& [g, v] : s.spider) spider[g.name()] = v;
    summaries.push_back(json{{"strategy", s.strategy},
                             {"fi", json{{"mean", s.fi_mean}, {"range", s.fi_range}}},
                             {"avg_as", json{{"mean", s.avg_as_mean}, {"range", s.avg_as_range}}},
                             {"min_as", json{{"mean", s.min_as_mean}, {"range", s.min_as_range}}},
                             {"format_score", json{{"mean", s.format_mean}}},
                             {"spider", spider}});
  }
  return json{{"summaries", summaries}};
}

json weight_trace_from_ndjson(std::istream& diagnostics) {
  std::vector<int64_t> iterations;
  std::vector<double> fi;
  std::map<std::string, std::vector<double>> alpha, history;
  std::string line;
  while (std::getline(diagnostics, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    iterations.push_back(j.at("iteration").get<int64_t>());
    fi.push_back(j.at("fi").get<double>());
    for (const auto& [g, v] : j.at("alpha").items()) alpha[g].push_back(v.get<double>());
    for (const auto& [g, v] : j.at("h").items()) history[g].push_back(v.get<double>());
  }
  json alpha_j = json::object(), h_j = json::object();
  for (const auto& [g, v] : alpha) alpha_j[g] = v;
  for (const auto& [g, v] : history) h_j[g] = v;
  return json{{"iterations", iterations}, {"fi", fi}, {"alpha", alpha_j}, {"h", h_j}};
}

}  // namespace appa
