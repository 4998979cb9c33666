#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "groundnet/graph_compiler.hpp"
#include "groundnet/model.hpp"
#include "groundnet/scene.hpp"
#include "groundnet/tape.hpp"

namespace groundnet {

// Model parameters bound onto a tape as leaf nodes, once per forward
// pass, so gradients can be read back per parameter after backward().
struct BoundParams {
  std::vector<std::pair<std::string, Var>> vars;
  const ModelConfig* config = nullptr;

  Var at(const std::string& name) const;
};

BoundParams bind_params(Tape& tape, const Model& model);

// [xmin/W, ymin/H, xmax/W, ymax/H, area_box/area_image].
std::vector<double> spatial_features(const BoundingBox& box, double image_w, double image_h);

struct AttendResult {
  Var output;   // (E) weighted average of word embeddings
  Var weights;  // (|T|) attention distribution over the phrase
};

// Text encoder: embeds the phrase, runs the 2-layer bidirectional
// recurrence, concatenates the four per-word states, scores them with the
// attention row, and averages the word embeddings under the softmaxed
// scores. An empty phrase falls back to the learned null token (or
// raises EmptyPhrase when the fallback is disabled).
AttendResult attend(Tape& tape, const std::vector<std::string>& phrase, const Model& model,
                    const BoundParams& params, bool allow_null_fallback = true);

// Locate: fused text/box scoring followed by a softmax across boxes.
Var locate(Tape& tape, const std::vector<std::string>& phrase, const Scene& scene,
           const Model& model, const BoundParams& params);
// Scoring stage alone, with a caller-supplied text vector (E).
Var locate_from_text(Tape& tape, Var text_vec, const Scene& scene, const Model& model,
                     const BoundParams& params);

// Relate: pairwise score matrix over boxes mixed with the input
// distribution. input_dist must sum to 1 within 1e-6.
Var relate(Tape& tape, const std::vector<std::string>& phrase, const Scene& scene,
           Var input_dist, const Model& model, const BoundParams& params);
Var relate_from_text(Tape& tape, Var text_vec, const Scene& scene, Var input_dist,
                     const Model& model, const BoundParams& params);

// Elementwise product of two distributions, renormalized.
Var intersect(Tape& tape, Var p, Var q);

// Per-node grounding distributions for a full graph execution.
struct GroundingResult {
  std::map<std::int32_t, Tensor> distributions;  // node id -> probabilities over boxes
  std::map<std::int32_t, std::int64_t> argmax;   // node id -> most likely box index
  std::int32_t root = -1;
};

// Tape-level execution trace; keeps the Vars alive for loss building.
struct ExecutionTrace {
  std::map<std::int32_t, Var> node_outputs;
  Var root_output;
};

// Runs the graph over the scene in topological (id) order. Module errors
// are rethrown with the offending node id attached.
ExecutionTrace execute_on_tape(Tape& tape, const ComputationGraph& graph, const Scene& scene,
                               const Model& model, const BoundParams& params);
GroundingResult execute(const ComputationGraph& graph, const Scene& scene, const Model& model);

// Serializes a grounding result (node id -> distribution) as JSON.
std::string grounding_to_json(const ComputationGraph& graph, const GroundingResult& result);
// DOT rendering of the graph with per-node argmax/probability
// annotations and confidence shading.
std::string grounding_to_dot(const ComputationGraph& graph, const GroundingResult& result);

}  // namespace groundnet
