// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "gtpo/task.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>

#include "gtpo/error.hpp"
#include "gtpo/rng.hpp"

namespace gtpo {
namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

std::size_t find_sequence(std::span<const TokenId> hay, std::span<const TokenId> needle, std::size_t from) {
  if (needle.empty() || hay.size() < needle.size()) return npos;
  for (std::size_t p = from; p + needle.size() <= hay.size(); ++p) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(p))) return p;
  }
  return npos;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct TagScan {
  int formatting = 0;
  // Half-open token range of the answer span, when one is delimited.
  std::optional<std::pair<std::size_t, std::size_t>> answer;
};

TagScan scan_tags(std::span<const TokenId> c, const TagTokens& tags, bool unordered) {
  TagScan scan;
  const std::size_t any_ro = find_sequence(c, tags.reasoning_open, 0);
  const std::size_t any_rc = find_sequence(c, tags.reasoning_close, 0);
  const std::size_t any_ao = find_sequence(c, tags.answer_open, 0);
  const std::size_t any_ac = find_sequence(c, tags.answer_close, 0);
  const int present = (any_ro != npos) + (any_rc != npos) + (any_ao != npos) + (any_ac != npos);
  if (present == 0) return scan;

  bool full = false;
  std::size_t ans_begin = npos;
  std::size_t ans_end = npos;
  if (unordered) {
    full = present == 4;
    if (full) {
      ans_begin = any_ao + tags.answer_open.size();
      ans_end = find_sequence(c, tags.answer_close, ans_begin);
    }
  } else if (present == 4) {
    const std::size_t ro = any_ro;
    const std::size_t rc = find_sequence(c, tags.reasoning_close, ro + tags.reasoning_open.size());
    const std::size_t ao = rc == npos ? npos : find_sequence(c, tags.answer_open, rc + tags.reasoning_close.size());
    const std::size_t ac = ao == npos ? npos : find_sequence(c, tags.answer_close, ao + tags.answer_open.size());
    full = ac != npos;
    if (full) {
      ans_begin = ao + tags.answer_open.size();
      ans_end = ac;
    }
  }
  scan.formatting = full ? 10 : 1;
  if (full && ans_end != npos) scan.answer = std::make_pair(ans_begin, ans_end);
  return scan;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const std::string& s = symbols_[i];
    if (s.empty()) throw Error(ErrorKind::kInvalidInput, "vocabulary symbols must be non-empty");
    if (!index_.emplace(s, static_cast<TokenId>(i)).second) {
      throw Error(ErrorKind::kInvalidInput, "duplicate vocabulary symbol '" + s + "'");
    }
    longest_ = std::max(longest_, s.size());
  }
}

const std::string& Vocabulary::symbol(TokenId id) const {
  if (id < 0 || id >= size()) throw Error(ErrorKind::kInvalidInput, "token id " + std::to_string(id) + " not in vocabulary");
  return symbols_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view symbol) const {
  const auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view symbol) const {
  const auto found = find(symbol);
  if (!found) throw Error(ErrorKind::kInvalidInput, "unknown symbol '" + std::string(symbol) + "'");
  return *found;
}

std::string Vocabulary::decode(std::span<const TokenId> tokens, std::string_view separator) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += separator;
    out += symbol(tokens[i]);
  }
  return out;
}

TokenSeq Vocabulary::encode(std::string_view text) const {
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[pos]))) {
      ++pos;
      continue;
    }
    bool matched = false;
    for (std::size_t len = std::min(longest_, text.size() - pos); len > 0; --len) {
      if (const auto id = find(text.substr(pos, len))) {
        out.push_back(*id);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      throw Error(ErrorKind::kInvalidInput, "cannot tokenize '" + std::string(text.substr(pos)) + "'");
    }
  }
  return out;
}

const Vocabulary& arithmetic_vocabulary() {
  static const Vocabulary vocab({"<eos>", "<reasoning>", "</reasoning>", "<answer>", "</answer>",
                                 "0", "1", "2", "3", "4", "5", "6", "7", "8", "9",
                                 "+", "-", "=", "?",
                                 "add", "sub", "carry", "so", "is"});
  return vocab;
}

TagTokens default_tags(const Vocabulary& vocab) {
  return TagTokens{{vocab.id("<reasoning>")}, {vocab.id("</reasoning>")}, {vocab.id("<answer>")},
                   {vocab.id("</answer>")}};
}

TokenId eos_token(const Vocabulary& vocab) { return vocab.id("<eos>"); }

TaskInstance generate_task(std::uint64_t seed, int difficulty, const Vocabulary& vocab) {
  if (difficulty != 1 && difficulty != 2) {
    throw Error(ErrorKind::kInvalidInput, "difficulty must be 1 or 2, got " + std::to_string(difficulty));
  }
  Rng rng(derive_seed({seed, 0x7461736bULL}));
  const int limit = difficulty == 1 ? 10 : 100;
  TaskInstance task;
  task.lhs = static_cast<int>(rng.below(limit));
  task.rhs = static_cast<int>(rng.below(limit));
  task.op = rng.below(2) == 0 ? '+' : '-';
  if (task.op == '-' && task.lhs < task.rhs) std::swap(task.lhs, task.rhs);
  task.question = std::to_string(task.lhs) + task.op + std::to_string(task.rhs) + "=?";
  task.prompt = vocab.encode(task.question);
  task.gold = std::to_string(task.op == '+' ? task.lhs + task.rhs : task.lhs - task.rhs);
  task.tags = default_tags(vocab);
  return task;
}

std::optional<long long> evaluate_question(std::string_view q) {
  long long a = 0;
  long long b = 0;
  const char* p = q.data();
  const char* end = q.data() + q.size();
  auto r1 = std::from_chars(p, end, a);
  if (r1.ec != std::errc() || r1.ptr == end) return std::nullopt;
  const char op = *r1.ptr;
  if (op != '+' && op != '-') return std::nullopt;
  auto r2 = std::from_chars(r1.ptr + 1, end, b);
  if (r2.ec != std::errc() || std::string_view(r2.ptr, static_cast<std::size_t>(end - r2.ptr)) != "=?") {
    return std::nullopt;
  }
  return op == '+' ? a + b : a - b;
}

RewardBreakdown score_completion(std::span<const TokenId> completion, const TaskInstance& task,
                                 const Vocabulary& vocab, const ScoreOptions& options) {
  const TagScan scan = scan_tags(completion, task.tags, options.unordered_formatting);
  RewardBreakdown r;
  r.formatting = scan.formatting;
  if (scan.formatting == 10 && scan.answer) {
    const auto [b, e] = *scan.answer;
    if (trim(vocab.decode(completion.subspan(b, e - b))) == task.gold) r.accuracy = 10;
  }
  return r;
}

std::optional<std::string> extract_answer(std::span<const TokenId> completion, const TaskInstance& task,
                                          const Vocabulary& vocab, const ScoreOptions& options) {
  const TagScan scan = scan_tags(completion, task.tags, options.unordered_formatting);
  if (scan.formatting != 10 || !scan.answer) return std::nullopt;
  const auto [b, e] = *scan.answer;
  return trim(vocab.decode(completion.subspan(b, e - b)));
}

void write_corpus(std::ostream& out, std::span<const TaskInstance> tasks) {
  for (const TaskInstance& t : tasks) out << t.question << '\t' << t.gold << '\n';
}

std::vector<TaskInstance> read_corpus(std::istream& in, const Vocabulary& vocab) {
  std::vector<TaskInstance> tasks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::kIo, "corpus line " + std::to_string(line_no) + ": expected '<question>\\t<gold>'");
    }
    TaskInstance t;
    t.question = line.substr(0, tab);
    t.gold = line.substr(tab + 1);
    const auto value = evaluate_question(t.question);
    if (!value) {
      throw Error(ErrorKind::kIo, "corpus line " + std::to_string(line_no) + ": malformed question '" + t.question + "'");
    }
    const auto op_pos = t.question.find_first_of("+-");
    t.op = t.question[op_pos];
    t.lhs = std::stoi(t.question.substr(0, op_pos));
    t.rhs = std::stoi(t.question.substr(op_pos + 1));
    t.prompt = vocab.encode(t.question);
    t.tags = default_tags(vocab);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace gtpo
