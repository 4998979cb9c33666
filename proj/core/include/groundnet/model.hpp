#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "groundnet/rng.hpp"
#include "groundnet/scene.hpp"
#include "groundnet/tensor.hpp"

namespace groundnet {

// How a Relate node turns its raw score matrix into a distribution.
// ColumnSoftmax normalizes each column into a distribution over output
// boxes, so the result is an exact mixture; RawRenormalize multiplies the
// raw matrix by the input and rescales by the total (kept for
// experimentation, not a distribution in general).
enum class RelateNorm { ColumnSoftmax, RawRenormalize };

// Which nodes contribute supporting-object predictions during
// evaluation.
enum class SupportingNodes { AllIntermediate, LocateOnly };

RelateNorm relate_norm_from_name(const std::string& name);
const char* relate_norm_name(RelateNorm v);
SupportingNodes supporting_nodes_from_name(const std::string& name);
const char* supporting_nodes_name(SupportingNodes v);

struct ModelConfig {
  std::int64_t hidden_size = 64;   // H; per-direction recurrent state size
  std::int64_t embed_size = 64;    // E; word embedding and fused-feature size
  std::int64_t visual_dim = 0;     // D_vis; length of box visual features
  RelateNorm relate_norm = RelateNorm::ColumnSoftmax;
  SupportingNodes supporting_nodes = SupportingNodes::AllIntermediate;
  // Attention scope over the expression. Only "node-span" is
  // implemented; the free-form variants are recognized and rejected.
  std::string attend_scope = "node-span";

  void validate() const;
};

// Word-to-id mapping shared by training and evaluation. Index 0 is the
// learned null token (used by Relate nodes with an empty phrase), index 1
// the unknown-word token.
struct Vocabulary {
  std::vector<std::string> words;  // includes the two specials at [0] and [1]
  std::unordered_map<std::string, std::int64_t> index;

  static constexpr std::int64_t kNullId = 0;
  static constexpr std::int64_t kUnkId = 1;

  static Vocabulary build(const std::vector<Scene>& scenes);
  std::int64_t id_of(const std::string& word) const;
  std::int64_t size() const { return static_cast<std::int64_t>(words.size()); }
};

// All learned tensors, keyed by name in a fixed order. One shared
// parameter set serves every node of every graph.
struct ModelParams {
  std::vector<std::pair<std::string, Tensor>> tensors;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const;

  // Parameter tensors subject to weight decay (the matrices; biases are
  // exempt).
  static bool decays(const std::string& name);
};

// Fresh Xavier-initialized parameters; biases zero except forget gates
// at 1.0. Deterministic given the rng.
ModelParams init_params(const ModelConfig& config, std::int64_t vocab_size, Rng& rng);

// A trained (or initializable) model bundle: everything evaluate/ground
// need to reproduce training-time behavior.
struct Model {
  ModelConfig config;
  Vocabulary vocab;
  std::vector<std::string> stopwords;  // lexicon used when compiling graphs
  ModelParams params;
  std::map<std::string, std::string> meta;  // training provenance (clip norm, history, ...)
};

// Versioned binary checkpoint: JSON header (config, vocab, stopwords,
// meta) followed by named raw little-endian float64 tensors. Identical
// models serialize to identical bytes.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace groundnet
