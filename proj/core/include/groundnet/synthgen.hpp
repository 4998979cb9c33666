#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "groundnet/rng.hpp"
#include "groundnet/scene.hpp"
#include "groundnet/treebank.hpp"

namespace groundnet {

// Generation recipe for the synthetic benchmark: colored shapes on a
// jittered grid, referred to by attribute phrases optionally chained
// through spatial relations.
struct WorldSpec {
  std::vector<std::string> shapes;
  std::vector<std::string> colors;
  // Each relation is one or two words, e.g. "left of", "nearest".
  std::vector<std::string> relations = {"left of", "right of", "above", "below", "nearest"};
  std::int64_t grid_w = 5, grid_h = 5;
  double cell_px = 64;
  double box_px = 40;
  double jitter_px = 8;
  std::int64_t boxes_min = 4, boxes_max = 7;
  std::int64_t visual_dim = 0;  // must equal |shapes| + |colors|
  double feature_noise_sigma = 0.05;
  std::int64_t max_depth = 3;  // number of chained noun phrases
  // Per-scene attribute pool; small pools force repeated (color, shape)
  // pairs so relations are needed to disambiguate.
  std::int64_t attr_pool_min = 2, attr_pool_max = 4;

  void validate() const;
  static WorldSpec from_json_file(const std::string& path);
  std::string to_json() const;
};

// Exact grounding of a template expression tree against box geometry:
// attribute predicates over the gold (color, shape) labels, spatial
// predicates over box centers. Returns the unique referent and the
// referents of all embedded noun phrases; throws NotUnique or
// Unsatisfiable otherwise.
struct LogicalGrounding {
  std::int32_t target_id = -1;
  std::set<std::int32_t> supporting_ids;
};

// Gold labels synthgen assigns to each generated box, needed by the
// evaluator (visual features are noisy one-hots of these).
struct SceneObjects {
  std::vector<std::int64_t> shape;  // per box index
  std::vector<std::int64_t> color;
};

LogicalGrounding logical_ground(const ParseTree& expression, const Scene& scene,
                                const SceneObjects& objects, const WorldSpec& spec);

// Recovers gold labels from the noisy one-hot features of a generated
// scene (argmax per segment), for replaying logical_ground on datasets
// loaded from disk.
SceneObjects decode_objects(const Scene& scene, const WorldSpec& spec);

// One scene: grid layout without overlap, noisy one-hot features, and a
// template expression guaranteed unique by logical_ground.
// GenerationExhausted if no identifying expression is found after
// max_attempts tries.
Scene gen_scene(const WorldSpec& spec, Rng& rng, std::int64_t scene_id, int max_attempts = 200);

struct DatasetSplits {
  std::vector<Scene> train;
  std::vector<Scene> validation;
  std::vector<Scene> test;
};

// Deterministic dataset generation: scene k always uses rng stream k, so
// the output is independent of generation order.
DatasetSplits gen_dataset(const WorldSpec& spec, std::uint64_t seed, std::int64_t num_train,
                          std::int64_t num_val, std::int64_t num_test);

}  // namespace groundnet
