// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gtpo/group.hpp"

namespace gtpo {

/// Token id <-> symbol table. Symbols are matched longest-first when
/// encoding text; whitespace between symbols is ignored.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> symbols);

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& symbol(TokenId id) const;
  std::optional<TokenId> find(std::string_view symbol) const;
  /// Like find() but throws kInvalidInput for unknown symbols.
  TokenId id(std::string_view symbol) const;

  std::string decode(std::span<const TokenId> tokens, std::string_view separator = "") const;
  TokenSeq encode(std::string_view text) const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t longest_ = 0;
};

/// The tagged-arithmetic vocabulary: <eos>, the four tags, digits, operators
/// and a handful of reasoning filler words.
const Vocabulary& arithmetic_vocabulary();

/// Token sequences of the four formatting tags (one token each in the
/// default vocabulary, but matching works on sequences).
struct TagTokens {
  TokenSeq reasoning_open;
  TokenSeq reasoning_close;
  TokenSeq answer_open;
  TokenSeq answer_close;
};

TagTokens default_tags(const Vocabulary& vocab = arithmetic_vocabulary());
TokenId eos_token(const Vocabulary& vocab = arithmetic_vocabulary());

struct TaskInstance {
  int lhs = 0;
  int rhs = 0;
  char op = '+';
  std::string question;  // e.g. "7+5=?"
  TokenSeq prompt;
  std::string gold;      // exact integer result, e.g. "12"
  TagTokens tags;
};

/// Deterministic a+b or a-b (a >= b) with `difficulty`-digit operands.
/// Throws kInvalidInput unless difficulty is 1 or 2.
TaskInstance generate_task(std::uint64_t seed, int difficulty,
                           const Vocabulary& vocab = arithmetic_vocabulary());

/// Evaluates a question of the form "<a><op><b>=?" with integer arithmetic.
/// Independent of generate_task; used to verify gold answers.
std::optional<long long> evaluate_question(std::string_view question);

struct RewardBreakdown {
  int formatting = 0;  // 0, 1 or 10
  int accuracy = 0;    // 0 or 10
  int total() const { return formatting + accuracy; }
};

struct ScoreOptions {
  /// Accept the four tags in any order for the full formatting score.
  bool unordered_formatting = false;
};

/// formatting: 10 when <reasoning>, </reasoning>, <answer>, </answer> appear
/// in that order; 1 when only some tags appear (or all four out of order);
/// 0 with no tags. accuracy: 10 when formatting is 10 and the trimmed text
/// between <answer> and </answer> equals the gold answer.
RewardBreakdown score_completion(std::span<const TokenId> completion, const TaskInstance& task,
                                 const Vocabulary& vocab = arithmetic_vocabulary(),
                                 const ScoreOptions& options = {});

/// Text inside the answer tags when the completion has full formatting.
std::optional<std::string> extract_answer(std::span<const TokenId> completion, const TaskInstance& task,
                                          const Vocabulary& vocab = arithmetic_vocabulary(),
                                          const ScoreOptions& options = {});

// Corpus files hold one task per line: "<question>\t<gold>".
void write_corpus(std::ostream& out, std::span<const TaskInstance> tasks);
std::vector<TaskInstance> read_corpus(std::istream& in, const Vocabulary& vocab = arithmetic_vocabulary());

}  // namespace gtpo
