#include "groundnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "groundnet/errors.hpp"
#include "groundnet/graph_compiler.hpp"
#include "json.hpp"

namespace groundnet {

namespace {

using nlohmann::json;

Lexicon lexicon_from_words(const std::vector<std::string>& stopwords) {
  Lexicon lex;
  lex.stopwords.insert(stopwords.begin(), stopwords.end());
  return lex;
}

std::int64_t box_index_of_id(const Scene& scene, std::int32_t id) {
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    if (scene.boxes[i].id == id) return static_cast<std::int64_t>(i);
  }
  throw Error("box id " + std::to_string(id) + " not present in scene " +
              std::to_string(scene.id));
}

Var nll_loss(Tape& tape, Var root_dist, std::int64_t target_index) {
  return tape.scalar_scale(tape.log(tape.pick(root_dist, target_index)), -1.0);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs <= 0 || lr0 <= 0 || weight_decay < 0 || clip_norm <= 0) {
    throw Error("train config values must be positive");
  }
  if (lr_decay <= 0 || lr_decay >= 1) throw Error("lr decay must lie in (0, 1)");
  model.validate();
}

double TrainConfig::learning_rate(std::int64_t epoch) const {
  return lr0 * std::pow(lr_decay, static_cast<double>(epoch));
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open train config: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("malformed train config " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "groundnet-train" || doc.value("version", 0) != 1) {
    throw Error("not a groundnet-train v1 file: " + path);
  }
  TrainConfig cfg;
  cfg.epochs = doc.value("epochs", cfg.epochs);
  cfg.lr0 = doc.value("lr0", cfg.lr0);
  cfg.lr_decay = doc.value("lr_decay", cfg.lr_decay);
  cfg.weight_decay = doc.value("weight_decay", cfg.weight_decay);
  cfg.clip_norm = doc.value("clip_norm", cfg.clip_norm);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.model.hidden_size = doc.value("hidden_size", cfg.model.hidden_size);
  cfg.model.embed_size = doc.value("embed_size", cfg.model.embed_size);
  cfg.model.visual_dim = doc.value("visual_dim", cfg.model.visual_dim);
  if (doc.contains("relate_norm")) {
    cfg.model.relate_norm = relate_norm_from_name(doc.at("relate_norm").get<std::string>());
  }
  if (doc.contains("supporting_nodes")) {
    cfg.model.supporting_nodes =
        supporting_nodes_from_name(doc.at("supporting_nodes").get<std::string>());
  }
  cfg.model.attend_scope = doc.value("attend_scope", cfg.model.attend_scope);
  return cfg;
}

std::string TrainConfig::to_json() const {
  json doc;
  doc["format"] = "groundnet-train";
  doc["version"] = 1;
  doc["epochs"] = epochs;
  doc["lr0"] = lr0;
  doc["lr_decay"] = lr_decay;
  doc["weight_decay"] = weight_decay;
  doc["clip_norm"] = clip_norm;
  doc["seed"] = seed;
  doc["hidden_size"] = model.hidden_size;
  doc["embed_size"] = model.embed_size;
  doc["visual_dim"] = model.visual_dim;
  doc["relate_norm"] = relate_norm_name(model.relate_norm);
  doc["supporting_nodes"] = supporting_nodes_name(model.supporting_nodes);
  doc["attend_scope"] = model.attend_scope;
  return doc.dump(2) + "\n";
}

Model train(const std::vector<Scene>& train_scenes, const std::vector<Scene>& val_scenes,
            const TrainConfig& config, const std::vector<std::string>& stopwords,
            const TrainLogger& logger) {
  config.validate();
  if (train_scenes.empty()) throw Error("training split is empty");

  const Lexicon lexicon = lexicon_from_words(stopwords);

  Model model;
  model.config = config.model;
  if (model.config.visual_dim == 0) {
    model.config.visual_dim = train_scenes.front().feature_length();
  }
  {
    std::vector<Scene> vocab_source = train_scenes;
    vocab_source.insert(vocab_source.end(), val_scenes.begin(), val_scenes.end());
    model.vocab = Vocabulary::build(vocab_source);
  }
  model.stopwords = stopwords;
  Rng init_rng(config.seed, 1);
  model.params = init_params(model.config, model.vocab.size(), init_rng);

  // Graphs are pure functions of the parse; compile once.
  std::vector<ComputationGraph> graphs;
  graphs.reserve(train_scenes.size());
  for (const Scene& scene : train_scenes) {
    graphs.push_back(generate_computation_graph(read_ptb(scene.parse), lexicon));
  }

  std::vector<std::size_t> order(train_scenes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<std::string> history;
  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate(epoch);
    Rng shuffle_rng(config.seed, 1000 + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    }

    double loss_sum = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const Scene& scene = train_scenes[order[pos]];
      const ComputationGraph& graph = graphs[order[pos]];
      try {
        Tape tape;
        BoundParams bound = bind_params(tape, model);
        ExecutionTrace trace = execute_on_tape(tape, graph, scene, model, bound);
        Var loss = nll_loss(tape, trace.root_output, box_index_of_id(scene, scene.target_id));
        loss_sum += tape.value(loss).at(0);
        tape.backward(loss);

        // Gradient = d(loss)/dW + 2 * lambda * W on the decayed matrices,
        // then global-norm clipping, then the SGD step.
        std::vector<Tensor> grads;
        grads.reserve(bound.vars.size());
        double sq_norm = 0.0;
        for (const auto& [name, var] : bound.vars) {
          Tensor g = tape.grad(var);
          if (config.weight_decay > 0 && ModelParams::decays(name)) {
            const Tensor& w = model.params.at(name);
            for (std::int64_t i = 0; i < g.size(); ++i) {
              g.at(i) += 2.0 * config.weight_decay * w.at(i);
            }
          }
          for (std::int64_t i = 0; i < g.size(); ++i) sq_norm += g.at(i) * g.at(i);
          grads.push_back(std::move(g));
        }
        const double norm = std::sqrt(sq_norm);
        const double scale = norm > config.clip_norm ? config.clip_norm / norm : 1.0;
        for (std::size_t p = 0; p < bound.vars.size(); ++p) {
          Tensor& w = model.params.at(bound.vars[p].first);
          const Tensor& g = grads[p];
          for (std::int64_t i = 0; i < w.size(); ++i) w.at(i) -= lr * scale * g.at(i);
          if (!w.all_finite()) {
            throw NonFiniteValue("parameter " + bound.vars[p].first + " became non-finite");
          }
        }
      } catch (const NonFiniteValue& e) {
        throw NonFiniteValue("training aborted at scene " + std::to_string(scene.id) + ": " +
                             e.what());
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.learning_rate = lr;
    stats.mean_train_loss = loss_sum / static_cast<double>(train_scenes.size());
    if (!val_scenes.empty()) {
      stats.validation_target_accuracy = evaluate(val_scenes, model).target_accuracy;
    }
    if (logger) logger(stats);
    std::ostringstream line;
    line << "epoch=" << epoch << " lr=" << lr << " mean_loss=" << stats.mean_train_loss
         << " val_target_acc=" << stats.validation_target_accuracy;
    history.push_back(line.str());
  }

  model.meta["clip_norm"] = std::to_string(config.clip_norm);
  model.meta["weight_decay"] = std::to_string(config.weight_decay);
  model.meta["epochs"] = std::to_string(config.epochs);
  model.meta["lr0"] = std::to_string(config.lr0);
  model.meta["lr_decay"] = std::to_string(config.lr_decay);
  model.meta["seed"] = std::to_string(config.seed);
  for (std::size_t i = 0; i < history.size(); ++i) {
    model.meta["history." + std::to_string(i)] = history[i];
  }
  return model;
}

EvalReport evaluate(const std::vector<Scene>& scenes, const Model& model) {
  const Lexicon lexicon = lexicon_from_words(model.stopwords);
  EvalReport report;
  for (const Scene& scene : scenes) {
    const ComputationGraph graph = generate_computation_graph(read_ptb(scene.parse), lexicon);
    const GroundingResult result = execute(graph, scene, model);

    InstanceResult inst;
    inst.scene_id = scene.id;
    const std::int64_t root_argmax = result.argmax.at(graph.root);
    inst.predicted_target = scene.boxes[static_cast<std::size_t>(root_argmax)].id;
    inst.target_correct = inst.predicted_target == scene.target_id;

    for (const GraphNode& node : graph.nodes) {
      if (node.id == graph.root) continue;
      if (model.config.supporting_nodes == SupportingNodes::LocateOnly &&
          node.kind != NodeKind::Locate) {
        continue;
      }
      const std::int64_t box_index = result.argmax.at(node.id);
      inst.supporting_predictions.push_back(
          scene.boxes[static_cast<std::size_t>(box_index)].id);
    }
    inst.has_gold_supporting = !scene.supporting_ids.empty();
    if (inst.has_gold_supporting) {
      for (std::int32_t pred : inst.supporting_predictions) {
        if (scene.supporting_ids.count(pred)) {
          inst.supporting_correct = true;
          break;
        }
      }
      ++report.num_supporting_instances;
      if (inst.supporting_correct) ++report.num_supporting_correct;
    }
    ++report.num_instances;
    if (inst.target_correct) ++report.num_target_correct;
    report.per_instance.push_back(std::move(inst));
  }
  if (report.num_instances > 0) {
    report.target_accuracy = static_cast<double>(report.num_target_correct) /
                             static_cast<double>(report.num_instances);
  }
  if (report.num_supporting_instances > 0) {
    report.supporting_accuracy = static_cast<double>(report.num_supporting_correct) /
                                 static_cast<double>(report.num_supporting_instances);
  }
  return report;
}

double instance_loss(const Scene& scene, const Model& model) {
  const Lexicon lexicon = lexicon_from_words(model.stopwords);
  const ComputationGraph graph = generate_computation_graph(read_ptb(scene.parse), lexicon);
  Tape tape;
  BoundParams bound = bind_params(tape, model);
  ExecutionTrace trace = execute_on_tape(tape, graph, scene, model, bound);
  Var loss = nll_loss(tape, trace.root_output, box_index_of_id(scene, scene.target_id));
  return tape.value(loss).at(0);
}

std::string EvalReport::to_json() const {
  json doc;
  doc["format"] = "groundnet-eval-report";
  doc["version"] = 1;
  doc["target_accuracy"] = target_accuracy;
  doc["supporting_accuracy"] = supporting_accuracy;
  doc["num_instances"] = num_instances;
  doc["num_target_correct"] = num_target_correct;
  doc["num_supporting_instances"] = num_supporting_instances;
  doc["num_supporting_correct"] = num_supporting_correct;
  json records = json::array();
  for (const InstanceResult& r : per_instance) {
    json jr;
    jr["scene"] = r.scene_id;
    jr["predicted_target"] = r.predicted_target;
    jr["target_correct"] = r.target_correct;
    jr["supporting_predictions"] = r.supporting_predictions;
    jr["has_gold_supporting"] = r.has_gold_supporting;
    jr["supporting_correct"] = r.supporting_correct;
    records.push_back(std::move(jr));
  }
  doc["per_instance"] = std::move(records);
  return doc.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "metric                     correct / total    accuracy\n";
  os << "target localization        " << num_target_correct << " / " << num_instances << "    "
     << 100.0 * target_accuracy << "%\n";
  os << "supporting localization    " << num_supporting_correct << " / "
     << num_supporting_instances << "    " << 100.0 * supporting_accuracy << "%\n";
  return os.str();
}

}  // namespace groundnet
