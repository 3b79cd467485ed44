// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <utility>

#include "gtpo/error.hpp"
#include "gtpo/trainer.hpp"

namespace gtpo {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw Error(ErrorKind::kConfig, "invalid value '" + value + "' for key '" + key + "' (expected " + expected + ")");
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

template <typename E>
using Names = std::vector<std::pair<E, std::string>>;

template <typename E>
E parse_enum(const std::string& key, const std::string& v, const Names<E>& names) {
  std::string expected;
  for (const auto& [value, name] : names) {
    if (v == name) return value;
    expected += expected.empty() ? name : " | " + name;
  }
  bad_value(key, v, expected);
}

template <typename E>
std::string enum_name(E e, const Names<E>& names) {
  for (const auto& [value, name] : names) {
    if (value == e) return name;
  }
  return "?";
}

const Names<Mode> kModes = {{Mode::kGrpo, "grpo"}, {Mode::kGtpo, "gtpo"}};
const Names<OptimizerKind> kOptimizers = {{OptimizerKind::kAdamW, "adamw"}, {OptimizerKind::kSgd, "sgd"}};
const Names<KlEstimator> kKl = {{KlEstimator::kK3, "k3"}, {KlEstimator::kExact, "exact"}};
const Names<Normalization> kNorm = {{Normalization::kPerLength, "per-length"},
                                    {Normalization::kCodeFaithful, "code-faithful"}};
const Names<OverlapMode> kOverlap = {{OverlapMode::kUnion, "union"},
                                     {OverlapMode::kProduct, "code-faithful-product"}};
const Names<EntropyTerm> kEntropyTerm = {{EntropyTerm::kAdvantageShift, "advantage-shift"},
                                         {EntropyTerm::kDifferentiable, "differentiable"}};

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define GTPO_SIZE(name)                                                                             \
  Entry {                                                                                           \
    #name, [](RunConfig& c, const std::string& v) { c.name = parse_u64(#name, v); },                \
        [](const RunConfig& c) { return std::to_string(c.name); }                                   \
  }
#define GTPO_INT(name)                                                                              \
  Entry {                                                                                           \
    #name, [](RunConfig& c, const std::string& v) { c.name = parse_int(#name, v); },                \
        [](const RunConfig& c) { return std::to_string(c.name); }                                   \
  }
#define GTPO_REAL(name)                                                                             \
  Entry {                                                                                           \
    #name, [](RunConfig& c, const std::string& v) { c.name = parse_double(#name, v); },             \
        [](const RunConfig& c) { return fmt(c.name); }                                              \
  }
#define GTPO_BOOL(name)                                                                             \
  Entry {                                                                                           \
    #name, [](RunConfig& c, const std::string& v) { c.name = parse_bool(#name, v); },               \
        [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }                   \
  }
#define GTPO_ENUM(name, table)                                                                      \
  Entry {                                                                                           \
    #name, [](RunConfig& c, const std::string& v) { c.name = parse_enum(#name, v, table); },        \
        [](const RunConfig& c) { return enum_name(c.name, table); }                                 \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      GTPO_ENUM(mode, kModes),
      GTPO_SIZE(num_generations),
      GTPO_SIZE(max_completion_length),
      GTPO_REAL(temperature),
      GTPO_SIZE(per_device_train_batch_size),
      GTPO_REAL(learning_rate),
      GTPO_ENUM(optimizer, kOptimizers),
      GTPO_REAL(adam_beta1),
      GTPO_REAL(adam_beta2),
      GTPO_REAL(adam_epsilon),
      GTPO_REAL(weight_decay),
      GTPO_REAL(max_grad_norm),
      GTPO_REAL(beta),
      GTPO_ENUM(kl_estimator, kKl),
      GTPO_REAL(gamma),
      GTPO_REAL(entropy_threshold),
      GTPO_BOOL(only_negative),
      GTPO_BOOL(no_delta),
      GTPO_ENUM(normalization, kNorm),
      GTPO_ENUM(lambda_overlap, kOverlap),
      GTPO_ENUM(entropy_term, kEntropyTerm),
      GTPO_SIZE(random_seed),
      GTPO_SIZE(max_steps),
      GTPO_SIZE(save_steps),
      GTPO_SIZE(probe_size),
      GTPO_SIZE(logging_steps),
      GTPO_INT(difficulty),
      Entry{"train_corpus", [](RunConfig& c, const std::string& v) { c.train_corpus = v; },
            [](const RunConfig& c) { return c.train_corpus; }},
      GTPO_BOOL(unordered_formatting),
      GTPO_INT(policy_order),
      GTPO_BOOL(warm_start),
      GTPO_SIZE(warm_start_demos),
      GTPO_REAL(warm_start_smoothing),
      GTPO_REAL(warm_start_sharpness),
      GTPO_BOOL(warm_start_backoff),
      GTPO_REAL(warm_start_missing_answer),
      GTPO_REAL(warm_start_early_eos),
      GTPO_INT(threads),
      GTPO_BOOL(dump_groups),
      GTPO_SIZE(eval_questions),
      GTPO_SIZE(eval_samples),
  };
  return table;
}

#undef GTPO_SIZE
#undef GTPO_INT
#undef GTPO_REAL
#undef GTPO_BOOL
#undef GTPO_ENUM

// Short spellings accepted on input; the resolved config uses the canonical key.
std::string canonical_key(const std::string& key) {
  if (key == "lr") return "learning_rate";
  if (key == "seed") return "random_seed";
  return key;
}

}  // namespace

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const std::string k = canonical_key(key);
  for (const Entry& e : entries()) {
    if (e.key == k) {
      e.set(config, value);
      return;
    }
  }
  throw Error(ErrorKind::kConfig, "unknown key '" + key + "'");
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorKind::kConfig, "override '" + assignment + "' is not of the form key=value");
  }
  set_config_value(config, trim(std::string_view(assignment).substr(0, eq)),
                   trim(std::string_view(assignment).substr(eq + 1)));
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig, where + "expected key = value, got '" + body + "'");
    }
    try {
      set_config_value(config, trim(std::string_view(body).substr(0, eq)),
                       trim(std::string_view(body).substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorKind::kConfig, where + e.detail());
    }
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config file '" + path + "'");
  return parse_config(in, path);
}

std::string render_config(const RunConfig& config) {
  std::ostringstream out;
  for (const Entry& e : entries()) out << e.key << " = " << e.get(config) << '\n';
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : entries()) keys.push_back(e.key);
  return keys;
}

void validate_config(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::kConfig, what);
  };
  require(c.num_generations >= 2, "num_generations must be at least 2");
  require(c.max_completion_length >= 1, "max_completion_length must be at least 1");
  require(c.temperature > 0.0, "temperature must be positive");
  require(c.per_device_train_batch_size >= 1, "per_device_train_batch_size must be at least 1");
  require(c.learning_rate > 0.0, "learning_rate must be positive");
  require(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0, "adam_beta1 must lie in [0, 1)");
  require(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0, "adam_beta2 must lie in [0, 1)");
  require(c.adam_epsilon > 0.0, "adam_epsilon must be positive");
  require(c.weight_decay >= 0.0, "weight_decay must be non-negative");
  require(c.beta >= 0.0, "beta must be non-negative");
  require(c.gamma >= 0.0, "gamma must be non-negative");
  require(c.entropy_threshold > 0.0, "entropy_threshold must be positive");
  require(c.probe_size >= 1, "probe_size must be at least 1");
  require(c.logging_steps >= 1, "logging_steps must be at least 1");
  require(c.difficulty == 1 || c.difficulty == 2, "difficulty must be 1 or 2");
  require(c.policy_order >= 1, "policy_order must be at least 1");
  require(c.warm_start_demos >= 1, "warm_start_demos must be at least 1");
  require(c.warm_start_smoothing > 0.0, "warm_start_smoothing must be positive");
  require(c.warm_start_sharpness > 0.0, "warm_start_sharpness must be positive");
  require(c.warm_start_missing_answer >= 0.0 && c.warm_start_early_eos >= 0.0 &&
              c.warm_start_missing_answer + c.warm_start_early_eos <= 1.0,
          "warm_start_missing_answer and warm_start_early_eos must be non-negative and sum to at most 1");
  require(c.threads >= 1, "threads must be at least 1");
  require(c.eval_questions == 0 || c.eval_samples >= 1, "eval_samples must be at least 1");
}

}  // namespace gtpo
