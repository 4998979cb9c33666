#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "groundnet/model.hpp"
#include "groundnet/modules.hpp"
#include "groundnet/scene.hpp"

namespace groundnet {

struct TrainConfig {
  std::int64_t epochs = 6;
  double lr0 = 0.01;
  double lr_decay = 0.4;          // multiplied onto the rate after each epoch
  double weight_decay = 0.0005;   // L2 coefficient on the weight matrices
  double clip_norm = 10.0;        // global gradient-norm ceiling
  std::uint64_t seed = 0;
  ModelConfig model;

  void validate() const;
  // lr for epoch e: lr0 * lr_decay^e.
  double learning_rate(std::int64_t epoch) const;

  static TrainConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

struct EpochStats {
  std::int64_t epoch = 0;
  double learning_rate = 0;
  double mean_train_loss = 0;
  double validation_target_accuracy = 0;
};

using TrainLogger = std::function<void(const EpochStats&)>;

// Single-instance SGD with the configured schedule: per instance, compile
// the parse, execute the graph, take the negative log-likelihood of the
// gold box under the root distribution, add weight decay on the
// matrices, clip the global gradient norm, and step. Deterministic given
// the seed (instance order is reshuffled each epoch from a seeded
// stream). NonFiniteValue aborts with the scene id attached.
Model train(const std::vector<Scene>& train_scenes, const std::vector<Scene>& val_scenes,
            const TrainConfig& config, const std::vector<std::string>& stopwords,
            const TrainLogger& logger = nullptr);

struct InstanceResult {
  std::int64_t scene_id = 0;
  std::int32_t predicted_target = -1;
  bool target_correct = false;
  std::vector<std::int32_t> supporting_predictions;
  bool has_gold_supporting = false;
  bool supporting_correct = false;
};

// Target accuracy counts every instance; supporting accuracy counts only
// instances with at least one gold supporting object, and an instance is
// supporting-correct when any intermediate-node argmax hits a gold
// supporting box.
struct EvalReport {
  double target_accuracy = 0;
  double supporting_accuracy = 0;
  std::int64_t num_instances = 0;
  std::int64_t num_target_correct = 0;
  std::int64_t num_supporting_instances = 0;
  std::int64_t num_supporting_correct = 0;
  std::vector<InstanceResult> per_instance;

  std::string to_json() const;
  std::string to_table() const;
};

EvalReport evaluate(const std::vector<Scene>& scenes, const Model& model);

// Loss of one instance on a fresh tape (exposed for tests).
double instance_loss(const Scene& scene, const Model& model);

}  // namespace groundnet
