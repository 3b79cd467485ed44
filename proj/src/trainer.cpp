// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gtpo/error.hpp"
#include "gtpo/rng.hpp"

namespace gtpo {
namespace {

// Stream tags for derive_seed so that independent draws never share a seed.
constexpr std::uint64_t kTaskStream = 1;
constexpr std::uint64_t kRolloutStream = 2;
constexpr std::uint64_t kDemoStream = 3;
constexpr std::uint64_t kEvalTaskStream = 4;
constexpr std::uint64_t kEvalSampleStream = 5;

SampleOptions sample_options(const RunConfig& config) {
  SampleOptions o;
  o.max_len = config.max_completion_length;
  o.temperature = config.temperature;
  o.eos = eos_token(trainer_vocabulary());
  return o;
}

ScoreOptions score_options(const RunConfig& config) { return ScoreOptions{config.unordered_formatting}; }

void append_number(TokenSeq& out, int value, const Vocabulary& vocab) {
  for (const char ch : std::to_string(value)) out.push_back(vocab.id(std::string(1, ch)));
}

double mean_row_entropy(const Matrix& logits) {
  double acc = 0.0;
  for (std::size_t t = 0; t < logits.rows(); ++t) acc += entropy_of_logits(logits.row(t));
  return acc / static_cast<double>(logits.rows());
}

}  // namespace

const Vocabulary& trainer_vocabulary() { return arithmetic_vocabulary(); }

TokenSeq demo_completion(const TaskInstance& task, DemoKind kind) {
  const Vocabulary& vocab = trainer_vocabulary();
  const int answer = std::stoi(task.gold);
  TokenSeq out = task.tags.reasoning_open;
  out.push_back(vocab.id(task.op == '+' ? "add" : "sub"));
  out.push_back(vocab.id("so"));
  out.insert(out.end(), task.tags.reasoning_close.begin(), task.tags.reasoning_close.end());
  if (kind != DemoKind::kEarlyEos) {
    if (kind == DemoKind::kFull) out.insert(out.end(), task.tags.answer_open.begin(), task.tags.answer_open.end());
    append_number(out, answer, vocab);
    out.insert(out.end(), task.tags.answer_close.begin(), task.tags.answer_close.end());
  }
  out.push_back(eos_token(vocab));
  return out;
}

void warm_start_policy(PolicyTable& policy, const RunConfig& config) {
  const int vocab_size = policy.vocab_size();
  const int begin = vocab_size;
  const auto k = static_cast<std::size_t>(policy.order());

  // counts[j][last j context symbols] -> next-token counts, begin-padded.
  std::vector<std::map<std::vector<int>, std::vector<double>>> counts(k + 1);
  Rng kinds(derive_seed({config.random_seed, kDemoStream, 0}));
  for (std::size_t n = 0; n < config.warm_start_demos; ++n) {
    const TaskInstance task = generate_task(derive_seed({config.random_seed, kDemoStream, n + 1}), config.difficulty);
    const double u = kinds.uniform();
    DemoKind kind = DemoKind::kFull;
    if (u < config.warm_start_missing_answer) {
      kind = DemoKind::kMissingAnswer;
    } else if (u < config.warm_start_missing_answer + config.warm_start_early_eos) {
      kind = DemoKind::kEarlyEos;
    }
    std::vector<int> seq(k, begin);
    seq.insert(seq.end(), task.prompt.begin(), task.prompt.end());
    const std::size_t first = seq.size();
    const TokenSeq completion = demo_completion(task, kind);
    seq.insert(seq.end(), completion.begin(), completion.end());
    for (std::size_t p = first; p < seq.size(); ++p) {
      for (std::size_t j = 0; j <= k; ++j) {
        std::vector<int> key(seq.begin() + static_cast<std::ptrdiff_t>(p - j),
                             seq.begin() + static_cast<std::ptrdiff_t>(p));
        auto& row = counts[j][key];
        if (row.empty()) row.assign(static_cast<std::size_t>(vocab_size), 0.0);
        row[static_cast<std::size_t>(seq[p])] += 1.0;
      }
    }
  }

  const std::size_t base = static_cast<std::size_t>(vocab_size) + 1;
  const double alpha = config.warm_start_smoothing;
  std::vector<int> context(k);
  for (std::size_t r = 0; r < policy.num_rows(); ++r) {
    if (r == policy.default_row()) {
      context.assign(k, -1);  // nothing matches but the empty context
    } else {
      std::size_t code = r;
      for (std::size_t slot = k; slot-- > 0;) {
        context[slot] = static_cast<int>(code % base);
        code /= base;
      }
    }
    const std::vector<double>* found = nullptr;
    const std::size_t shortest = config.warm_start_backoff ? 0 : k;
    for (std::size_t j = k + 1; j-- > shortest && !found;) {
      const std::vector<int> key(context.end() - static_cast<std::ptrdiff_t>(j), context.end());
      if (std::find(key.begin(), key.end(), -1) != key.end()) continue;
      const auto it = counts[j].find(key);
      if (it != counts[j].end()) found = &it->second;
    }
    std::span<double> row = policy.row(r);
    if (!found) {
      std::fill(row.begin(), row.end(), 0.0);
      continue;
    }
    double total = 0.0;
    for (const double c : *found) total += c;
    const double denom = total + alpha * vocab_size;
    for (std::size_t v = 0; v < row.size(); ++v) {
      row[v] = config.warm_start_sharpness * std::log(((*found)[v] + alpha) / denom);
    }
  }
}

std::vector<TaskInstance> load_training_corpus(const RunConfig& config) {
  if (config.train_corpus.empty()) return {};
  std::ifstream in(config.train_corpus);
  if (!in) throw Error(ErrorKind::kIo, "cannot open training corpus '" + config.train_corpus + "'");
  std::vector<TaskInstance> corpus = read_corpus(in, trainer_vocabulary());
  if (corpus.empty()) throw Error(ErrorKind::kIo, "training corpus '" + config.train_corpus + "' is empty");
  return corpus;
}

TaskInstance training_task(const RunConfig& config, const std::vector<TaskInstance>& corpus, std::size_t n) {
  if (!corpus.empty()) return corpus[n % corpus.size()];
  return generate_task(derive_seed({config.random_seed, kTaskStream, n}), config.difficulty, trainer_vocabulary());
}

TaskInstance evaluation_task(const RunConfig& config, std::size_t q) {
  return generate_task(derive_seed({config.random_seed, kEvalTaskStream, q}), config.difficulty, trainer_vocabulary());
}

TrainerState initialize_run(const RunConfig& config) {
  validate_config(config);
  const Vocabulary& vocab = trainer_vocabulary();
  PolicyTable policy(config.policy_order, vocab.size());
  if (config.warm_start) warm_start_policy(policy, config);
  AdamConfig adam;
  adam.lr = config.learning_rate;
  adam.beta1 = config.adam_beta1;
  adam.beta2 = config.adam_beta2;
  adam.eps = config.adam_epsilon;
  adam.weight_decay = config.weight_decay;
  TrainerState state{policy, policy, OptimState(policy.params().size(), adam), 0.0, 0, load_training_corpus(config)};

  std::vector<TokenSeq> prompts;
  for (std::size_t n = 0; n < config.probe_size; ++n) prompts.push_back(training_task(config, state.corpus, n).prompt);
  state.initial_entropy =
      probe_initial_entropy(state.policy, prompts, ProbeOptions{config.max_completion_length, eos_token(vocab)});
  return state;
}

StepMetrics train_step(TrainerState& state, const RunConfig& config, const std::vector<TaskInstance>& tasks,
                       StepTrace* trace) {
  if (tasks.empty()) throw Error(ErrorKind::kInvalidInput, "train_step needs at least one task");
  const Vocabulary& vocab = trainer_vocabulary();
  const SampleOptions sampling = sample_options(config);
  ++state.step;

  Matrix param_grad(state.policy.params().rows(), state.policy.params().cols(), 0.0);
  const double batch_scale = 1.0 / static_cast<double>(tasks.size());

  double sum_acc = 0.0;
  double sum_fmt = 0.0;
  double sum_entropy = 0.0;
  double sum_conflict = 0.0;
  double sum_kl = 0.0;
  double sum_loss = 0.0;
  std::size_t n_completions = 0;
  std::size_t n_tokens = 0;
  std::size_t n_updated = 0;
  if (trace) *trace = StepTrace{};

  for (std::size_t b = 0; b < tasks.size(); ++b) {
    const TaskInstance& task = tasks[b];
    SampledGroup sampled = sample_group(state.policy, task.prompt, config.num_generations, sampling,
                                        derive_seed({config.random_seed, kRolloutStream, state.step, b}),
                                        config.threads);
    CompletionGroup& group = sampled.group;
    const std::size_t g = group.size();
    for (std::size_t i = 0; i < g; ++i) {
      const RewardBreakdown r = score_completion(group.completions[i], task, vocab, score_options(config));
      group.rewards[i] = r.total();
      sum_acc += r.accuracy;
      sum_fmt += r.formatting;
    }
    assign_advantages(group);
    const std::vector<double>& adv = *group.advantages;
    const SignPartition signs = partition_signs(adv);
    const bool degenerate = is_degenerate(adv);

    LogitsTensor logits;
    LogitsTensor ref_logits;
    std::vector<double> entropies(g);
    for (std::size_t i = 0; i < g; ++i) {
      logits.push_back(gather_logits(state.policy, sampled.rollouts[i]));
      ref_logits.push_back(gather_logits(state.reference, sampled.rollouts[i]));
      entropies[i] = mean_row_entropy(logits.back());
      sum_entropy += entropies[i];
    }
    n_completions += g;

    LambdaWeights lambda = build_lambda_weights(group, signs, config.lambda_overlap);
    sum_conflict += conflict_stats(lambda) * static_cast<double>(g);

    std::vector<int> keep(g, 1);
    std::vector<double> folded(adv.begin(), adv.end());
    LossReport report;
    if (config.mode == Mode::kGtpo) {
      GtpoOptions opts;
      opts.normalization = config.normalization;
      opts.entropy_term = config.entropy_term;
      for (std::size_t i = 0; i < g; ++i) {
        const bool filtered = !config.no_delta && (!config.only_negative || adv[i] < 0.0);
        keep[i] = filtered ? delta_filter(state.initial_entropy, entropies[i], config.entropy_threshold) : 1;
        if (config.entropy_term == EntropyTerm::kAdvantageShift) {
          folded[i] = fold_entropy_penalty(adv[i], entropies[i], config.gamma, keep[i]);
        } else {
          folded[i] = keep[i] * adv[i];
        }
      }
      if (config.entropy_term == EntropyTerm::kDifferentiable) {
        opts.gamma = config.gamma;
        opts.keep = keep;
      }
      report = gtpo_loss_and_grad(group, logits, lambda, folded, opts, &ref_logits);
    } else {
      GrpoOptions opts{config.beta, config.kl_estimator};
      report = grpo_loss_and_grad(group, logits, adv, opts, &ref_logits);
    }
    sum_kl += report.mean_kl * static_cast<double>(report.n_tokens);
    n_tokens += report.n_tokens;

    std::vector<double> grad_max(g, 0.0);
    for (std::size_t i = 0; i < g; ++i) {
      for (const double x : report.grad[i].flat()) grad_max[i] = std::max(grad_max[i], std::abs(x));
    }
    if (!degenerate) {
      for (std::size_t i = 0; i < g; ++i) {
        accumulate_param_grad(sampled.rollouts[i], report.grad[i], param_grad, batch_scale);
      }
      sum_loss += report.value;
      ++n_updated;
    }
    if (trace) {
      GroupTrace gt;
      gt.question = task.question;
      gt.group = std::move(group);
      gt.entropies = std::move(entropies);
      gt.keep = std::move(keep);
      gt.folded_advantages = std::move(folded);
      gt.lambda = std::move(lambda);
      gt.completion_grad_max_abs = std::move(grad_max);
      gt.skipped = degenerate;
      trace->groups.push_back(std::move(gt));
    }
  }

  StepMetrics m;
  m.step = state.step;
  const auto nc = static_cast<double>(n_completions);
  m.mean_accuracy_pct = sum_acc / nc * 10.0;
  m.mean_formatting_pct = sum_fmt / nc * 10.0;
  m.mean_entropy = sum_entropy / nc;
  m.mean_conflict = sum_conflict / nc;
  m.mean_kl = n_tokens ? sum_kl / static_cast<double>(n_tokens) : 0.0;

  if (n_updated > 0) {
    m.loss_value = sum_loss / static_cast<double>(n_updated);
    m.grad_norm = clip_grad_norm(param_grad.flat(), config.max_grad_norm);
    if (config.optimizer == OptimizerKind::kAdamW) {
      adam_step(state.policy.params().flat(), param_grad.flat(), state.optim);
    } else {
      sgd_step(state.policy.params().flat(), param_grad.flat(), config.learning_rate, config.weight_decay);
    }
    if (trace) trace->updated = true;
  }
  return m;
}

RunResult run_training(const RunConfig& config, const StepCallback& on_step) {
  RunResult result{{}, initialize_run(config)};
  TrainerState& state = result.state;
  const std::size_t batch = config.per_device_train_batch_size;
  StepTrace trace;
  for (std::size_t s = 0; s < config.max_steps; ++s) {
    std::vector<TaskInstance> tasks;
    for (std::size_t b = 0; b < batch; ++b) tasks.push_back(training_task(config, state.corpus, s * batch + b));
    const StepMetrics m = train_step(state, config, tasks, on_step ? &trace : nullptr);
    result.metrics.push_back(m);
    if (on_step && !on_step(m, trace, state)) break;
  }
  return result;
}

std::vector<EvalRecord> evaluate_policy(const PolicyTable& policy, const std::vector<TaskInstance>& tasks,
                                        std::size_t samples, const RunConfig& config) {
  const Vocabulary& vocab = trainer_vocabulary();
  const SampleOptions sampling = sample_options(config);
  std::vector<EvalRecord> records;
  for (std::size_t q = 0; q < tasks.size(); ++q) {
    EvalRecord rec;
    rec.question = tasks[q].question;
    rec.gold = tasks[q].gold;
    for (std::size_t j = 0; j < samples; ++j) {
      const Rollout r = sample_completion(policy, tasks[q].prompt, sampling,
                                          derive_seed({config.random_seed, kEvalSampleStream, q, j}));
      const auto answer = extract_answer(r.tokens, tasks[q], vocab, score_options(config));
      rec.answers.push_back(answer.value_or(""));
      rec.correct.push_back(score_completion(r.tokens, tasks[q], vocab, score_options(config)).accuracy == 10);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string metrics_to_json(const StepMetrics& m) {
  nlohmann::ordered_json j;
  j["step"] = m.step;
  j["mean_accuracy_pct"] = m.mean_accuracy_pct;
  j["mean_formatting_pct"] = m.mean_formatting_pct;
  j["mean_entropy"] = m.mean_entropy;
  j["mean_kl"] = m.mean_kl;
  j["mean_conflict"] = m.mean_conflict;
  j["loss_value"] = m.loss_value;
  j["grad_norm"] = m.grad_norm;
  return j.dump();
}

StepMetrics metrics_from_json(const std::string& line) {
  try {
    const nlohmann::json j = nlohmann::json::parse(line);
    StepMetrics m;
    m.step = j.at("step").get<std::size_t>();
    m.mean_accuracy_pct = j.at("mean_accuracy_pct").get<double>();
    m.mean_formatting_pct = j.at("mean_formatting_pct").get<double>();
    m.mean_entropy = j.at("mean_entropy").get<double>();
    m.mean_kl = j.at("mean_kl").get<double>();
    m.mean_conflict = j.at("mean_conflict").get<double>();
    m.loss_value = j.at("loss_value").get<double>();
    m.grad_norm = j.at("grad_norm").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kIo, std::string("malformed metrics row: ") + e.what());
  }
}

std::vector<StepMetrics> read_metrics_jsonl(std::istream& in) {
  std::vector<StepMetrics> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(metrics_from_json(line));
    } catch (const Error& e) {
      throw Error(ErrorKind::kIo, "line " + std::to_string(line_no) + ": " + e.detail());
    }
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, const std::vector<StepMetrics>& rows) {
  out << "step,mean_accuracy_pct,mean_formatting_pct,mean_entropy,mean_kl,mean_conflict,loss_value,grad_norm\n";
  for (const StepMetrics& m : rows) {
    // Reuse the JSON number formatting so CSV and JSONL agree digit for digit.
    const nlohmann::json j = nlohmann::json::parse(metrics_to_json(m));
    out << m.step << ',' << j["mean_accuracy_pct"].dump() << ',' << j["mean_formatting_pct"].dump() << ','
        << j["mean_entropy"].dump() << ',' << j["mean_kl"].dump() << ',' << j["mean_conflict"].dump() << ','
        << j["loss_value"].dump() << ',' << j["grad_norm"].dump() << '\n';
  }
}

std::string group_trace_to_json(std::size_t step, const GroupTrace& g) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["question"] = g.question;
  j["prompt"] = g.group.prompt;
  j["completions"] = g.group.completions;
  j["rewards"] = g.group.rewards;
  j["advantages"] = g.group.advantages.value_or(std::vector<double>{});
  j["entropies"] = g.entropies;
  j["keep"] = g.keep;
  j["folded_advantages"] = g.folded_advantages;
  j["lambda"] = g.lambda.weights;
  j["conflict_counts"] = raw_conflict_counts(g.lambda);
  j["skipped"] = g.skipped;
  return j.dump();
}

RunResult run_training_to_dir(const RunConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "checkpoints", ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create output directory '" + (root / "checkpoints").string() + "': " + ec.message());

  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + p.string() + "'");
    return out;
  };
  {
    std::ofstream cfg = open(root / "resolved-config.txt");
    cfg << render_config(config);
  }
  std::ofstream metrics = open(root / "metrics.jsonl");
  std::ofstream groups;
  if (config.dump_groups) groups = open(root / "groups.jsonl");

  RunResult result = run_training(config, [&](const StepMetrics& m, const StepTrace& trace, const TrainerState& st) {
    if (m.step % config.logging_steps == 0 || m.step == config.max_steps) {
      metrics << metrics_to_json(m) << '\n';
    }
    if (config.dump_groups) {
      for (const GroupTrace& g : trace.groups) groups << group_trace_to_json(m.step, g) << '\n';
    }
    if (config.save_steps > 0 && m.step % config.save_steps == 0) {
      save_checkpoint(st.policy, (root / "checkpoints" / ("step-" + std::to_string(m.step) + ".ckpt")).string());
    }
    return true;
  });
  metrics.flush();
  if (!metrics) throw Error(ErrorKind::kIo, "failed writing '" + (root / "metrics.jsonl").string() + "'");
  save_checkpoint(result.state.policy, (root / "checkpoints" / "final.ckpt").string());

  std::ofstream csv = open(root / "metrics.csv");
  write_metrics_csv(csv, result.metrics);

  if (config.eval_questions > 0) {
    std::vector<TaskInstance> tasks;
    for (std::size_t q = 0; q < config.eval_questions; ++q) {
      tasks.push_back(evaluation_task(config, q));
    }
    const std::vector<EvalRecord> records = evaluate_policy(result.state.policy, tasks, config.eval_samples, config);
    std::ofstream rec = open(root / "eval_records.jsonl");
    write_eval_records(rec, records);
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k <= config.eval_samples; k *= 2) ks.push_back(k);
    if (ks.back() != config.eval_samples) ks.push_back(config.eval_samples);
    std::ofstream ev = open(root / "eval.csv");
    write_eval_csv(ev, records, ks);
  }
  return result;
}

}  // namespace gtpo
