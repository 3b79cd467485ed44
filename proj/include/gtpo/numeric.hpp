// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gtpo {

/// Dense row-major matrix of doubles. Used for per-completion logits
/// (positions x vocabulary) and for the policy parameter table.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// log(sum(exp(x))) with max subtraction.
double logsumexp(std::span<const double> logits);

/// Numerically stable softmax into `out` (same length as logits).
void softmax(std::span<const double> logits, std::span<double> out);
std::vector<double> softmax(std::span<const double> logits);

/// softmax(logits / temperature); temperature > 0.
std::vector<double> softmax_with_temperature(std::span<const double> logits, double temperature);

}  // namespace gtpo
