#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace groundnet {

// Half-open token-index interval [start, end).
struct TokenSpan {
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t length() const { return end - start; }
  bool contains(const TokenSpan& other) const {
    return start <= other.start && other.end <= end;
  }
  bool operator==(const TokenSpan&) const = default;
};

// Node of a bracketed constituency tree. Immutable after construction;
// safe to share across threads. A node is a leaf iff it carries a token
// iff it has no children. Spans are token indices assigned by
// left-to-right leaf order.
struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;
  std::optional<std::string> token;
  TokenSpan span;

  bool is_leaf() const { return token.has_value(); }
  bool label_has_prefix(const std::string& prefix) const {
    return label.compare(0, prefix.size(), prefix) == 0;
  }
};

// Parses one bracketed tree, e.g. "(NP (DT the) (NN plate))". Labels and
// tokens are whitespace-delimited. Raises TreeParseError (kind +
// byte offset) on malformed input.
ParseTree read_ptb(const std::string& text);

// Canonical bracketed form: single spaces, no trailing whitespace.
// read_ptb(write_ptb(t)) reproduces t exactly.
std::string write_ptb(const ParseTree& tree);

// Tokens of the leaves covered by span, in order. span must lie within
// tree.span (SpanOutOfRange otherwise). An empty span yields an empty list.
std::vector<std::string> yield_tokens(const ParseTree& tree, const TokenSpan& span);

// All leaf tokens in order.
std::vector<std::string> leaf_tokens(const ParseTree& tree);

// One tree per non-empty line.
std::vector<ParseTree> read_ptb_lines(const std::string& text);

}  // namespace groundnet
