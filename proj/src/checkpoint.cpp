// Copyright 2026 The GTPO Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "gtpo/error.hpp"
#include "gtpo/policy.hpp"

namespace gtpo {
namespace {

constexpr const char* kMagic = "gtpo-policy-checkpoint";

std::string hex(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

double parse_hex(const std::string& tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  const auto res = std::from_chars(first, last, v, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != last) {
    throw Error(ErrorKind::kIo, "checkpoint: malformed parameter '" + tok + "'");
  }
  return v;
}

template <typename T>
T read_field(std::istream& in, const std::string& key) {
  std::string name;
  T value{};
  if (!(in >> name >> value) || name != key) {
    throw Error(ErrorKind::kIo, "checkpoint: expected header field '" + key + "'");
  }
  return value;
}

}  // namespace

void write_checkpoint(const PolicyTable& policy, std::ostream& out) {
  out << kMagic << ' ' << kCheckpointVersion << '\n';
  out << "order " << policy.order() << '\n';
  out << "vocab " << policy.vocab_size() << '\n';
  out << "rows " << policy.num_rows() << '\n';
  for (std::size_t r = 0; r < policy.num_rows(); ++r) {
    const auto row = policy.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ' ';
      out << hex(row[j]);
    }
    out << '\n';
  }
}

PolicyTable read_checkpoint(std::istream& in) {
  const auto version = read_field<int>(in, kMagic);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kIo, "checkpoint: unsupported format version " + std::to_string(version));
  }
  const int order = read_field<int>(in, "order");
  const int vocab = read_field<int>(in, "vocab");
  const auto rows = read_field<std::size_t>(in, "rows");
  PolicyTable policy(order, vocab);
  if (rows != policy.num_rows()) {
    throw Error(ErrorKind::kIo, "checkpoint: row count " + std::to_string(rows) + " does not match order " +
                                    std::to_string(order) + " / vocab " + std::to_string(vocab));
  }
  std::string tok;
  for (double& v : policy.params().flat()) {
    if (!(in >> tok)) throw Error(ErrorKind::kIo, "checkpoint: truncated parameter table");
    v = parse_hex(tok);
  }
  if (in >> tok) throw Error(ErrorKind::kIo, "checkpoint: trailing data after parameter table");
  return policy;
}

void save_checkpoint(const PolicyTable& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot open checkpoint for writing: " + path);
  write_checkpoint(policy, out);
  if (!out) throw Error(ErrorKind::kIo, "failed writing checkpoint: " + path);
}

PolicyTable load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open checkpoint: " + path);
  try {
    return read_checkpoint(in);
  } catch (const Error& e) {
    throw Error(ErrorKind::kIo, e.detail() + " (" + path + ")");
  }
}

}  // namespace gtpo
