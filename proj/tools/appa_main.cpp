#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "appa/federation.hpp"
#include "appa/harness.hpp"

namespace {

using namespace appa;

struct GlobalFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> transport;
};

ExperimentConfig resolve_config(const GlobalFlags& flags) {
  if (flags.config_path.empty()) throw CLI::ValidationError("--config is required");
  ExperimentConfig cfg = load_config_file(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  if (flags.transport) cfg.transport = *flags.transport;
  cfg.validate();
  return cfg;
}

int cmd_gen_data(const GeneratorSpec& spec, const std::string& out_path, double split_ratio) {
  const PreferenceDataset dataset = generate_dataset(spec, split_ratio);
  if (out_path.empty() || out_path == "-") {
    save_dataset_ndjson(dataset, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    save_dataset_ndjson(dataset, out);
    std::cerr << "wrote " << dataset.questions().size() << " questions for "
              << dataset.groups().size() << " groups to " << out_path << "\n";
  }
  return 0;
}

int cmd_train(const GlobalFlags& flags) {
  const ExperimentConfig cfg = resolve_config(flags);
  const RunArtifacts artifacts = run_experiment(cfg);
  std::cout << evaluation_report_json(artifacts.eval).dump(2) << "\n";
  if (!cfg.out_dir.empty())
    std::cerr << "run artifacts written to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_evaluate(const GlobalFlags& flags, const std::string& checkpoint_path) {
  const ExperimentConfig cfg = resolve_config(flags);
  std::ifstream ckpt(checkpoint_path);
  if (!ckpt) throw std::runtime_error("cannot open checkpoint " + checkpoint_path);
  auto [policy, values] = load_checkpoint(ckpt);

  PreferenceDataset dataset = [&] {
    if (cfg.generator) return generate_dataset(*cfg.generator, cfg.split_ratio);
    std::ifstream in(*cfg.dataset_path);
    if (!in) throw std::runtime_error("cannot open dataset " + *cfg.dataset_path);
    return load_dataset_ndjson(in, cfg.split_ratio, cfg.seed);
  }();

  const EvaluationReport report = evaluate_policy(policy, dataset, cfg.metric, cfg.appa,
                                                  cfg.eval_sampling, mix_seed(cfg.seed, "eval"));
  std::cout << evaluation_report_json(report).dump(2) << "\n";
  return 0;
}

int cmd_compare(const GlobalFlags& flags, const std::vector<std::string>& strategies,
                const std::vector<uint64_t>& seeds) {
  const ExperimentConfig cfg = resolve_config(flags);
  const ComparisonResult result = compare_strategies(cfg, strategies, seeds);
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir + "/comparison.csv");
    write_comparison_csv(result, csv);
    std::ofstream js(cfg.out_dir + "/comparison.json");
    js << comparison_json(result).dump(2) << "\n";
    std::cerr << "comparison written to " << cfg.out_dir << "\n";
  } else {
    write_comparison_csv(result, std::cout);
  }
  return 0;
}

int cmd_serve_client(const std::string& server, const std::string& group,
                     const std::string& dataset_path, const std::string& metric_name,
                     double omega) {
  const size_t colon = server.rfind(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--server must be host:port");
  const std::string host = server.substr(0, colon);
  const uint16_t port = static_cast<uint16_t>(std::stoul(server.substr(colon + 1)));

  std::ifstream in(dataset_path);
  if (!in) throw std::runtime_error("cannot open dataset " + dataset_path);
  // the split is irrelevant client-side; clients score whatever is broadcast
  const PreferenceDataset dataset = load_dataset_ndjson(in, 0.8, 0);
  const MetricKind metric = metric_from_string(metric_name);
  const GroupClient client = GroupClient::from_dataset(dataset, GroupId(group), metric, omega);
  std::cerr << "serving group " << group << " against " << host << ":" << port << "\n";
  run_group_client(host, port, client);
  return 0;
}

int cmd_diagnose_weights(const std::string& log_path, const std::string& out_path) {
  std::ifstream in(log_path);
  if (!in) throw std::runtime_error("cannot open diagnostics log " + log_path);
  const nlohmann::json trace = weight_trace_from_ndjson(in);
  if (out_path.empty() || out_path == "-") {
    std::cout << trace.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    out << trace.dump(2) << "\n";
    std::cerr << "weight trace written to " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated RLHF reward-aggregation simulator"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "experiment config JSON");
  uint64_t seed_flag = 0;
  auto* seed_opt = app.add_option("--seed", seed_flag, "override config seed");
  std::string out_flag;
  auto* out_opt = app.add_option("--out", out_flag, "override output directory");
  std::string transport_flag;
  auto* transport_opt = app.add_option("--transport", transport_flag, "inproc or tcp")
                            ->check(CLI::IsMember({"inproc", "tcp"}));

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic preference dataset");
  GeneratorSpec spec;
  std::string gen_out;
  double gen_split = 0.8;
  gen->add_option("--groups", spec.groups, "number of groups")->default_val(spec.groups);
  gen->add_option("--questions", spec.questions, "number of questions")->default_val(spec.questions);
  gen->add_option("--k-min", spec.k_min, "minimum options per question")->default_val(spec.k_min);
  gen->add_option("--k-max", spec.k_max, "maximum options per question")->default_val(spec.k_max);
  gen->add_option("--eta", spec.heterogeneity, "cross-group heterogeneity in [0,1]")
      ->default_val(spec.heterogeneity);
  gen->add_option("--gen-seed", spec.seed, "generator seed")->default_val(spec.seed);
  gen->add_option("--dataset-out", gen_out, "output path (default stdout)");
  gen->add_option("--split-ratio", gen_split, "train fraction")->default_val(gen_split);

  // train
  auto* tr = app.add_subcommand("train", "run one training experiment");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint on the held-out split");
  std::string checkpoint_path;
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "train and evaluate several strategies");
  std::vector<std::string> strategies{"average", "min", "appa"};
  std::vector<uint64_t> seeds{1, 2, 3};
  cmp->add_option("--strategies", strategies, "strategies to compare")->delimiter(',');
  cmp->add_option("--seeds", seeds, "seeds, one run per (strategy, seed)")->delimiter(',');

  // serve-client
  auto* serve = app.add_subcommand("serve-client", "run a standalone TCP group client");
  std::string server, group, dataset_path, metric_name = "js";
  double omega = kDefaultOmega;
  serve->add_option("--server", server, "server host:port")->required();
  serve->add_option("--group", group, "group name")->required();
  serve->add_option("--dataset", dataset_path, "dataset NDJSON with this group's targets")
      ->required();
  serve->add_option("--metric", metric_name, "js|wasserstein|cosine|borda")
      ->check(CLI::IsMember({"js", "wasserstein", "cosine", "borda"}));
  serve->add_option("--omega", omega, "metric/format blend weight")->default_val(omega);

  // diagnose-weights
  auto* diag = app.add_subcommand("diagnose-weights", "dump alpha/FI traces from a diagnostics log");
  std::string diag_log, diag_out;
  diag->add_option("--log", diag_log, "diagnostics NDJSON from a training run")->required();
  diag->add_option("--trace-out", diag_out, "output path (default stdout)");

  // let global flags (--config, --seed, ...) appear after the subcommand
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  if (*seed_opt) flags.seed = seed_flag;
  if (*out_opt) flags.out_dir = out_flag;
  if (*transport_opt) flags.transport = transport_flag;

  try {
    if (gen->parsed()) return cmd_gen_data(spec, gen_out, gen_split);
    if (tr->parsed()) return cmd_train(flags);
    if (ev->parsed()) return cmd_evaluate(flags, checkpoint_path);
    if (cmp->parsed()) return cmd_compare(flags, strategies, seeds);
    if (serve->parsed()) return cmd_serve_client(server, group, dataset_path, metric_name, omega);
    if (diag->parsed()) return cmd_diagnose_weights(diag_log, diag_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
