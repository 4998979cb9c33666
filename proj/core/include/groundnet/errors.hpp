#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace groundnet {

// Base class for every error raised by the library. The CLI surfaces
// what() verbatim and exits nonzero.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- treebank ---

enum class TreeParseErrorKind { UnbalancedParens, EmptyTree, LeafWithChildren };

class TreeParseError : public Error {
 public:
  TreeParseError(TreeParseErrorKind kind, std::size_t offset, const std::string& detail);
  TreeParseErrorKind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  TreeParseErrorKind kind_;
  std::size_t offset_;
};

class SpanOutOfRange : public Error {
 public:
  using Error::Error;
};

// --- graph_compiler ---

class OverlappingSpans : public Error {
 public:
  using Error::Error;
};

class EmptyPhraseAtLocate : public Error {
 public:
  using Error::Error;
};

// --- tensor_core ---

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

// --- grounding_modules ---

class EmptyPhrase : public Error {
 public:
  using Error::Error;
};

class DegenerateBox : public Error {
 public:
  using Error::Error;
};

class FeatureLengthMismatch : public Error {
 public:
  using Error::Error;
};

class DistributionNotNormalized : public Error {
 public:
  using Error::Error;
};

class VanishingMass : public Error {
 public:
  using Error::Error;
};

// --- scene ---

class SchemaVersionMismatch : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  InvariantViolation(std::size_t record_index, const std::string& detail);
  std::size_t record_index() const { return record_index_; }

 private:
  std::size_t record_index_ = 0;
};

// --- synthgen ---

class GenerationExhausted : public Error {
 public:
  using Error::Error;
};

class NotUnique : public Error {
 public:
  using Error::Error;
};

class Unsatisfiable : public Error {
 public:
  using Error::Error;
};

}  // namespace groundnet
