// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/eval.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "gtpo/error.hpp"

namespace gtpo {
namespace {

void check_k(std::span<const EvalRecord> records, std::size_t k) {
  if (k < 1) throw Error(ErrorKind::kInvalidInput, "k must be at least 1");
  for (const EvalRecord& r : records) {
    if (r.answers.size() != r.correct.size()) {
      throw Error(ErrorKind::kInvalidInput, "record '" + r.question + "' has mismatched answers and correctness");
    }
    if (k > r.n()) {
      throw Error(ErrorKind::kInvalidInput,
                  "k=" + std::to_string(k) + " exceeds n=" + std::to_string(r.n()) + " for '" + r.question + "'");
    }
  }
}

// 1 - C(n-c, k)/C(n, k) as a running product, stable for large n.
double unbiased_pass(std::size_t n, std::size_t c, std::size_t k) {
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (std::size_t i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  return 1.0 - miss;
}

}  // namespace

double pass_at_k(std::span<const EvalRecord> records, std::size_t k, bool unbiased) {
  check_k(records, k);
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const EvalRecord& r : records) {
    if (unbiased) {
      const auto c = static_cast<std::size_t>(std::count(r.correct.begin(), r.correct.end(), true));
      total += unbiased_pass(r.n(), c, k);
    } else {
      total += std::any_of(r.correct.begin(), r.correct.begin() + static_cast<std::ptrdiff_t>(k),
                           [](bool b) { return b; })
                   ? 1.0
                   : 0.0;
    }
  }
  return total / static_cast<double>(records.size());
}

std::string majority_answer(std::span<const std::string> answers) {
  std::map<std::string, std::size_t> counts;
  for (const std::string& a : answers) ++counts[a];
  std::string best;
  std::size_t best_count = 0;
  // std::map iterates in lexicographic order, so strict > keeps the smallest on ties.
  for (const auto& [answer, count] : counts) {
    if (count > best_count) {
      best = answer;
      best_count = count;
    }
  }
  return best;
}

double maj_at_k(std::span<const EvalRecord> records, std::size_t k) {
  check_k(records, k);
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const EvalRecord& r : records) {
    const std::string mode = majority_answer(std::span(r.answers).first(k));
    if (!mode.empty() && mode == r.gold) total += 1.0;
  }
  return total / static_cast<double>(records.size());
}

void write_eval_records(std::ostream& out, std::span<const EvalRecord> records) {
  for (const EvalRecord& r : records) {
    nlohmann::json j;
    j["question"] = r.question;
    j["gold"] = r.gold;
    j["answers"] = r.answers;
    j["correct"] = r.correct;
    out << j.dump() << '\n';
  }
}

std::vector<EvalRecord> read_eval_records(std::istream& in) {
  std::vector<EvalRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      EvalRecord r;
      r.question = j.value("question", std::string());
      r.gold = j.at("gold").get<std::string>();
      r.correct = j.at("correct").get<std::vector<bool>>();
      if (j.contains("answers")) {
        r.answers = j.at("answers").get<std::vector<std::string>>();
      } else {
        r.answers.assign(r.correct.size(), std::string());
      }
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kIo, "eval record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void write_eval_csv(std::ostream& out, std::span<const EvalRecord> records, std::span<const std::size_t> ks,
                    bool unbiased) {
  out << "k,pass_at_k,maj_at_k\n";
  for (const std::size_t k : ks) {
    out << k << ',' << pass_at_k(records, k, unbiased) << ',' << maj_at_k(records, k) << '\n';
  }
}

}  // namespace gtpo
