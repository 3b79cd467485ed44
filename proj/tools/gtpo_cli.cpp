// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

// gtpo: train, evaluate and inspect GTPO/GRPO runs on the tagged-arithmetic task.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gtpo/conflict_mask.hpp"
#include "gtpo/entropy.hpp"
#include "gtpo/error.hpp"
#include "gtpo/eval.hpp"
#include "gtpo/group.hpp"
#include "gtpo/policy.hpp"
#include "gtpo/trainer.hpp"

namespace {

using gtpo::Error;
using gtpo::ErrorKind;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out) {
  cmd->add_option("--config", o.config_path, "key=value configuration file");
  cmd->add_option("--set", o.overrides, "override a key (key=value), repeatable");
  if (with_out) cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "random seed (overrides random_seed)");
  cmd->add_option("--threads", o.threads, "rollout worker threads")->check(CLI::PositiveNumber);
}

gtpo::RunConfig resolve_config(const CommonOptions& o) {
  gtpo::RunConfig config = o.config_path.empty() ? gtpo::RunConfig{} : gtpo::load_config(o.config_path);
  for (const std::string& kv : o.overrides) gtpo::apply_override(config, kv);
  if (o.seed) config.random_seed = *o.seed;
  if (o.threads) config.threads = *o.threads;
  gtpo::validate_config(config);
  return config;
}

std::string fixed4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string format_row(const std::vector<double>& row) {
  std::ostringstream s;
  s << '[';
  for (std::size_t t = 0; t < row.size(); ++t) s << (t ? ", " : "") << row[t];
  s << ']';
  return s.str();
}

std::string format_tokens(const gtpo::TokenSeq& row) {
  std::ostringstream s;
  s << '[';
  for (std::size_t t = 0; t < row.size(); ++t) s << (t ? ", " : "") << row[t];
  s << ']';
  return s.str();
}

int cmd_train(const CommonOptions& o) {
  const gtpo::RunConfig config = resolve_config(o);
  const std::string out = o.out_dir.empty() ? "runs/latest" : o.out_dir;
  const gtpo::RunResult result = gtpo::run_training_to_dir(config, out);
  std::cout << "initial entropy " << fixed4(result.state.initial_entropy) << " nats\n";
  if (!result.metrics.empty()) std::cout << "final " << gtpo::metrics_to_json(result.metrics.back()) << '\n';
  std::cout << "wrote " << out << '\n';
  return 0;
}

std::vector<std::size_t> default_ks(std::size_t n) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= n; k *= 2) ks.push_back(k);
  if (!ks.empty() && ks.back() != n) ks.push_back(n);
  return ks;
}

int cmd_eval(const CommonOptions& o, const std::string& records_path, const std::string& checkpoint,
             std::vector<std::size_t> ks, bool unbiased) {
  std::vector<gtpo::EvalRecord> records;
  if (!records_path.empty()) {
    std::ifstream in(records_path);
    if (!in) throw Error(ErrorKind::kIo, "cannot open eval records '" + records_path + "'");
    records = gtpo::read_eval_records(in);
  } else {
    if (checkpoint.empty()) throw Error(ErrorKind::kConfig, "eval needs --records or --checkpoint");
    gtpo::RunConfig config = resolve_config(o);
    if (config.eval_questions == 0) config.eval_questions = 100;
    const gtpo::PolicyTable policy = gtpo::load_checkpoint(checkpoint);
    std::vector<gtpo::TaskInstance> tasks;
    for (std::size_t q = 0; q < config.eval_questions; ++q) {
      tasks.push_back(gtpo::evaluation_task(config, q));
    }
    records = gtpo::evaluate_policy(policy, tasks, config.eval_samples, config);
  }
  if (records.empty()) throw Error(ErrorKind::kInvalidInput, "no eval records");
  if (ks.empty()) {
    std::size_t n = records.front().n();
    for (const auto& r : records) n = std::min(n, r.n());
    ks = default_ks(n);
  }
  std::ostringstream csv;
  gtpo::write_eval_csv(csv, records, ks, unbiased);
  std::cout << csv.str();
  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    const std::string path = (std::filesystem::path(o.out_dir) / "eval.csv").string();
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
    out << csv.str();
    if (records_path.empty()) {
      const std::string rpath = (std::filesystem::path(o.out_dir) / "eval_records.jsonl").string();
      std::ofstream rec(rpath);
      if (!rec) throw Error(ErrorKind::kIo, "cannot write '" + rpath + "'");
      gtpo::write_eval_records(rec, records);
    }
  }
  return 0;
}

int cmd_probe(const CommonOptions& o, const std::string& checkpoint, bool fresh, int vocab) {
  gtpo::RunConfig config = resolve_config(o);
  const std::vector<gtpo::TaskInstance> corpus = gtpo::load_training_corpus(config);
  std::vector<gtpo::TokenSeq> prompts;
  for (std::size_t n = 0; n < config.probe_size; ++n) prompts.push_back(gtpo::training_task(config, corpus, n).prompt);
  const gtpo::TokenId eos = gtpo::eos_token(gtpo::trainer_vocabulary());
  double h = 0.0;
  if (!checkpoint.empty()) {
    h = gtpo::probe_initial_entropy(gtpo::load_checkpoint(checkpoint), prompts,
                                    {config.max_completion_length, eos});
  } else if (fresh || vocab > 0) {
    const int v = vocab > 0 ? vocab : gtpo::trainer_vocabulary().size();
    const gtpo::PolicyTable policy(config.policy_order, v);
    gtpo::ProbeOptions opts{config.max_completion_length, std::nullopt};
    if (eos < v) opts.eos = eos;
    h = gtpo::probe_initial_entropy(policy, prompts, opts);
  } else {
    h = gtpo::initialize_run(config).initial_entropy;
  }
  std::cout << fixed4(h) << '\n';
  std::cerr << "mean greedy completion entropy over " << prompts.size() << " prompts (nats); threshold "
            << fixed4(config.entropy_threshold) << '\n';
  return 0;
}

int cmd_diag(const std::string& path, std::size_t index, const std::string& overlap_name) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open group dump '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    // Not a single document: treat as JSON lines and pick line `index`.
    std::istringstream lines(text);
    std::string line;
    std::size_t seen = 0;
    bool found = false;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (seen++ == index) {
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorKind::kIo, path + ": " + e.what());
        }
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorKind::kIo, path + ": no group at index " + std::to_string(index));
  }

  gtpo::CompletionGroup group;
  try {
    group.completions = j.at("completions").get<std::vector<gtpo::TokenSeq>>();
    if (j.contains("prompt")) group.prompt = j.at("prompt").get<gtpo::TokenSeq>();
    if (j.contains("rewards")) group.rewards = j.at("rewards").get<std::vector<double>>();
    if (j.contains("advantages") && !j.at("advantages").empty()) {
      group.advantages = j.at("advantages").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kIo, path + ": " + e.what());
  }
  if (group.rewards.empty()) group.rewards.assign(group.completions.size(), 0.0);
  if (!group.advantages) {
    if (!j.contains("rewards")) throw Error(ErrorKind::kIo, path + ": group needs 'advantages' or 'rewards'");
    gtpo::assign_advantages(group);
  }
  gtpo::validate_group(group);

  const gtpo::OverlapMode overlap =
      overlap_name == "code-faithful-product" ? gtpo::OverlapMode::kProduct : gtpo::OverlapMode::kUnion;
  if (overlap_name != "union" && overlap_name != "code-faithful-product") {
    throw Error(ErrorKind::kConfig, "unknown overlap mode '" + overlap_name + "'");
  }
  const gtpo::SignPartition signs = gtpo::partition_signs(*group.advantages);
  const gtpo::LambdaWeights lw = gtpo::build_lambda_weights(group, signs, overlap);
  const std::vector<int> counts = gtpo::raw_conflict_counts(lw);

  for (std::size_t i = 0; i < group.size(); ++i) {
    const double a = (*group.advantages)[i];
    const char sign = std::abs(a) < gtpo::kZeroAdvantage ? '0' : (a > 0 ? '+' : '-');
    std::string mask;
    for (const auto c : lw.conflict[i]) mask += c ? '#' : '.';
    std::cout << "completion " << i << " (" << sign << ")  tokens " << format_tokens(group.completions[i])
              << "  lambda " << format_row(lw.weights[i]) << "  mask " << mask << "  conflicts " << counts[i]
              << '\n';
  }
  std::cout << "mean_conflict " << gtpo::conflict_stats(lw) << '\n';
  return 0;
}

int cmd_export(const std::string& metrics_path, std::string out_path) {
  std::ifstream in(metrics_path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open metrics file '" + metrics_path + "'");
  const std::vector<gtpo::StepMetrics> rows = gtpo::read_metrics_jsonl(in);
  if (out_path.empty()) {
    out_path = (std::filesystem::path(metrics_path).parent_path() / "metrics.csv").string();
  }
  if (out_path == "-") {
    gtpo::write_metrics_csv(std::cout, rows);
    return 0;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + out_path + "'");
  gtpo::write_metrics_csv(out, rows);
  std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GTPO/GRPO desk-scale trainer and diagnostics"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  auto* train = app.add_subcommand("train", "run training and write metrics, checkpoints and the resolved config");
  add_common(train, train_opts, true);

  CommonOptions eval_opts;
  std::string records_path;
  std::string eval_ckpt;
  std::vector<std::size_t> ks;
  bool unbiased = false;
  auto* eval = app.add_subcommand("eval", "pass@k and maj@k from an eval dump or a checkpoint");
  add_common(eval, eval_opts, true);
  eval->add_option("--records", records_path, "JSON-lines eval records");
  eval->add_option("--checkpoint", eval_ckpt, "policy checkpoint to sample from");
  eval->add_option("--k", ks, "k values (default: powers of two up to n)");
  eval->add_flag("--unbiased", unbiased, "use the combinatorial pass@k estimator");

  CommonOptions probe_opts;
  std::string probe_ckpt;
  bool fresh = false;
  int vocab = 0;
  auto* probe = app.add_subcommand("probe-entropy", "print the initial entropy probe <H>_ini");
  add_common(probe, probe_opts, false);
  probe->add_option("--checkpoint", probe_ckpt, "probe a saved policy");
  probe->add_flag("--fresh", fresh, "probe a fresh all-zero policy instead of the warm-started one");
  probe->add_option("--vocab", vocab, "vocabulary size of the fresh policy (implies --fresh)")
      ->check(CLI::Range(2, 1 << 16));

  std::string group_path;
  std::size_t group_index = 0;
  std::string overlap = "union";
  auto* diag = app.add_subcommand("diag-conflict", "print lambda weights and conflict masks for a group dump");
  diag->add_option("group", group_path, "group JSON (or JSON lines, see --index)")->required();
  diag->add_option("--index", group_index, "line to use from a JSON-lines dump");
  diag->add_option("--overlap", overlap, "union | code-faithful-product");

  std::string metrics_path;
  std::string csv_out;
  auto* exp = app.add_subcommand("export-csv", "convert metrics.jsonl to CSV");
  exp->add_option("metrics", metrics_path, "metrics.jsonl")->required();
  exp->add_option("--out", csv_out, "CSV path ('-' for stdout; default next to the input)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_opts);
    if (*eval) return cmd_eval(eval_opts, records_path, eval_ckpt, ks, unbiased);
    if (*probe) return cmd_probe(probe_opts, probe_ckpt, fresh, vocab);
    if (*diag) return cmd_diag(group_path, group_index, overlap);
    if (*exp) return cmd_export(metrics_path, csv_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
