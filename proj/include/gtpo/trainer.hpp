// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gtpo/conflict_mask.hpp"
#include "gtpo/entropy.hpp"
#include "gtpo/eval.hpp"
#include "gtpo/group.hpp"
#include "gtpo/objective.hpp"
#include "gtpo/optim.hpp"
#include "gtpo/policy.hpp"
#include "gtpo/task.hpp"

namespace gtpo {

enum class Mode { kGrpo, kGtpo };
enum class OptimizerKind { kAdamW, kSgd };

struct RunConfig {
  Mode mode = Mode::kGtpo;
  std::size_t num_generations = 8;
  std::size_t max_completion_length = 16;
  double temperature = 1.0;
  std::size_t per_device_train_batch_size = 1;

  double learning_rate = 0.03;
  OptimizerKind optimizer = OptimizerKind::kAdamW;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.95;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;
  double max_grad_norm = 0.1;  // <= 0 disables clipping

  // grpo only
  double beta = 0.0;
  KlEstimator kl_estimator = KlEstimator::kK3;

  // gtpo only
  double gamma = 0.1;
  double entropy_threshold = kLn2;
  bool only_negative = false;
  bool no_delta = false;
  Normalization normalization = Normalization::kPerLength;
  OverlapMode lambda_overlap = OverlapMode::kUnion;
  EntropyTerm entropy_term = EntropyTerm::kAdvantageShift;

  std::uint64_t random_seed = 0;
  std::size_t max_steps = 2000;
  std::size_t save_steps = 500;  // 0 disables periodic checkpoints
  std::size_t probe_size = 100;
  std::size_t logging_steps = 1;

  int difficulty = 1;
  std::string train_corpus;  // empty: tasks are generated from the seed
  bool unordered_formatting = false;

  int policy_order = 3;

  // Sharpening pre-pass: fit the policy to imperfect demonstrations before
  // the first step so that the probed initial entropy is low.
  bool warm_start = true;
  std::size_t warm_start_demos = 400;
  double warm_start_smoothing = 0.02;
  double warm_start_sharpness = 1.3;
  /// Unseen contexts fall back to shorter seen contexts; when false they keep
  /// all-zero (uniform) logits.
  bool warm_start_backoff = true;
  double warm_start_missing_answer = 0.2;
  double warm_start_early_eos = 0.2;

  int threads = 1;
  bool dump_groups = false;

  // Post-training evaluation (0 questions disables it).
  std::size_t eval_questions = 0;
  std::size_t eval_samples = 8;

  bool operator==(const RunConfig&) const = default;
};

/// One logged row. Field names match the metrics file keys.
struct StepMetrics {
  std::size_t step = 0;
  double mean_accuracy_pct = 0.0;
  double mean_formatting_pct = 0.0;
  double mean_entropy = 0.0;
  double mean_kl = 0.0;
  double mean_conflict = 0.0;
  double loss_value = 0.0;
  double grad_norm = 0.0;

  bool operator==(const StepMetrics&) const = default;
};

/// Everything a step computed for one group, for instrumentation and dumps.
struct GroupTrace {
  std::string question;
  CompletionGroup group;  // rewards and raw advantages filled in
  std::vector<double> entropies;
  std::vector<int> keep;
  std::vector<double> folded_advantages;
  LambdaWeights lambda;
  /// Largest |d loss / d logit| over each completion's positions.
  std::vector<double> completion_grad_max_abs;
  bool skipped = false;
};

struct StepTrace {
  std::vector<GroupTrace> groups;
  bool updated = false;
};

/// Mutable training state for one run.
struct TrainerState {
  PolicyTable policy;
  PolicyTable reference;
  OptimState optim;
  double initial_entropy = 0.0;
  std::size_t step = 0;
  std::vector<TaskInstance> corpus;
};

const Vocabulary& trainer_vocabulary();

/// Demonstration completion for `task`: the full tagged format, or one of
/// the two flawed variants (no <answer> tag, or stopping after </reasoning>).
enum class DemoKind { kFull, kMissingAnswer, kEarlyEos };
TokenSeq demo_completion(const TaskInstance& task, DemoKind kind);

/// Sharpening pre-pass: order-k counts over demonstrations with back-off to
/// shorter contexts, written into every row as log-probabilities scaled by
/// `warm_start_sharpness`.
void warm_start_policy(PolicyTable& policy, const RunConfig& config);

/// Tasks read from config.train_corpus, or empty when tasks are generated.
std::vector<TaskInstance> load_training_corpus(const RunConfig& config);

/// Task n of the run's training stream: cycles through `corpus` when it is
/// non-empty, otherwise generates from (random_seed, n).
TaskInstance training_task(const RunConfig& config, const std::vector<TaskInstance>& corpus, std::size_t n);

/// Question q of the held-out evaluation stream.
TaskInstance evaluation_task(const RunConfig& config, std::size_t q);

/// Builds the policy (fresh or warm-started), the frozen reference and the
/// probed initial entropy. Throws kConfig on invalid settings.
TrainerState initialize_run(const RunConfig& config);

/// One optimization step on `tasks` (one group per task). Skips the update
/// when every group is degenerate. Fills `trace` when non-null.
StepMetrics train_step(TrainerState& state, const RunConfig& config, const std::vector<TaskInstance>& tasks,
                       StepTrace* trace = nullptr);

/// Per-step observer; return false to stop early.
using StepCallback = std::function<bool(const StepMetrics&, const StepTrace&, const TrainerState&)>;

struct RunResult {
  std::vector<StepMetrics> metrics;
  TrainerState state;
};

/// Runs max_steps steps in memory.
RunResult run_training(const RunConfig& config, const StepCallback& on_step = {});

/// Runs training writing metrics.jsonl, metrics.csv, resolved-config.txt,
/// checkpoints/ (and groups.jsonl / eval files when enabled) under out_dir.
RunResult run_training_to_dir(const RunConfig& config, const std::string& out_dir);

/// Samples `samples` completions per question and extracts answers.
std::vector<EvalRecord> evaluate_policy(const PolicyTable& policy, const std::vector<TaskInstance>& tasks,
                                        std::size_t samples, const RunConfig& config);

std::string metrics_to_json(const StepMetrics& m);
StepMetrics metrics_from_json(const std::string& line);
void write_metrics_csv(std::ostream& out, const std::vector<StepMetrics>& rows);
std::vector<StepMetrics> read_metrics_jsonl(std::istream& in);

std::string group_trace_to_json(std::size_t step, const GroupTrace& g);

// Flat "key = value" configuration files; '#' starts a comment.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
/// Applies one "key=value" override. Throws kConfig on unknown keys or bad values.
void apply_override(RunConfig& config, const std::string& assignment);
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
/// Every key with its resolved value; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);
std::vector<std::string> config_keys();
/// Throws kConfig when values are out of range.
void validate_config(const RunConfig& config);

}  // namespace gtpo
