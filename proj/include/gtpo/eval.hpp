// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gtpo {

/// n sampled completions for one question. An empty answer string means
/// nothing could be extracted; it never matches a gold answer.
struct EvalRecord {
  std::string question;
  std::string gold;
  std::vector<std::string> answers;
  std::vector<bool> correct;

  std::size_t n() const { return correct.size(); }
  bool operator==(const EvalRecord&) const = default;
};

/// Fraction of questions with a correct completion among the first k.
/// With `unbiased`, averages 1 - C(n-c, k)/C(n, k) over questions instead.
/// Throws kInvalidInput when k < 1 or k exceeds some record's n.
double pass_at_k(std::span<const EvalRecord> records, std::size_t k, bool unbiased = false);

/// Fraction of questions whose modal answer among the first k equals gold.
/// Ties go to the lexicographically smallest answer.
double maj_at_k(std::span<const EvalRecord> records, std::size_t k);

/// Modal answer of the first k answers under the tie rule above.
std::string majority_answer(std::span<const std::string> answers);

void write_eval_records(std::ostream& out, std::span<const EvalRecord> records);
std::vector<EvalRecord> read_eval_records(std::istream& in);

/// "k,pass_at_k,maj_at_k" rows for the given ks.
void write_eval_csv(std::ostream& out, std::span<const EvalRecord> records, std::span<const std::size_t> ks,
                    bool unbiased = false);

}  // namespace gtpo
