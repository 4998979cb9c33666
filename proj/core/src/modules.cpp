#include "groundnet/modules.hpp"

#include <cmath>
#include <sstream>

#include "groundnet/errors.hpp"
#include "json.hpp"

namespace groundnet {

namespace {

// One direction of one recurrent layer over a sequence of input vectors.
// Gate order in the stacked weights is [input, forget, candidate, output].
std::vector<Var> run_lstm_direction(Tape& tape, const std::vector<Var>& inputs, Var w_ih,
                                    Var w_hh, Var bias, std::int64_t hidden, bool backward) {
  const std::int64_t n = static_cast<std::int64_t>(inputs.size());
  std::vector<Var> states(static_cast<std::size_t>(n));
  Var h = tape.constant(Tensor::zeros({hidden}));
  Var c = tape.constant(Tensor::zeros({hidden}));
  for (std::int64_t step = 0; step < n; ++step) {
    const std::int64_t t = backward ? n - 1 - step : step;
    Var x = inputs[static_cast<std::size_t>(t)];
    Var gates = tape.add(tape.add(tape.matmul(w_ih, x), tape.matmul(w_hh, h)), bias);
    Var i_gate = tape.sigmoid(tape.slice(gates, 0, hidden));
    Var f_gate = tape.sigmoid(tape.slice(gates, hidden, hidden));
    Var g_cand = tape.tanh(tape.slice(gates, 2 * hidden, hidden));
    Var o_gate = tape.sigmoid(tape.slice(gates, 3 * hidden, hidden));
    c = tape.add(tape.elementwise_mul(f_gate, c), tape.elementwise_mul(i_gate, g_cand));
    h = tape.elementwise_mul(o_gate, tape.tanh(c));
    states[static_cast<std::size_t>(t)] = h;
  }
  return states;
}

Var stack_rows(Tape& tape, const std::vector<Var>& rows, std::int64_t cols) {
  Var flat = tape.concat(rows);
  return tape.reshape(flat, {static_cast<std::int64_t>(rows.size()), cols});
}

void check_distribution(const Tensor& p, const char* who) {
  double s = 0.0;
  for (std::int64_t i = 0; i < p.size(); ++i) s += p.at(i);
  if (std::abs(s - 1.0) > 1e-6) {
    throw DistributionNotNormalized(std::string(who) + ": input sums to " + std::to_string(s));
  }
}

Tensor box_input_features(const BoundingBox& box, const Scene& scene,
                          std::int64_t expected_visual_dim) {
  if (static_cast<std::int64_t>(box.visual_features.size()) != expected_visual_dim) {
    throw FeatureLengthMismatch("box " + std::to_string(box.id) + " has " +
                                std::to_string(box.visual_features.size()) +
                                " visual features, model expects " +
                                std::to_string(expected_visual_dim));
  }
  std::vector<double> values = box.visual_features;
  for (double v : spatial_features(box, scene.width, scene.height)) values.push_back(v);
  return Tensor::vector(std::move(values));
}

}  // namespace

Var BoundParams::at(const std::string& name) const {
  for (const auto& [n, v] : vars) {
    if (n == name) return v;
  }
  throw Error("unbound parameter: " + name);
}

BoundParams bind_params(Tape& tape, const Model& model) {
  BoundParams bound;
  bound.config = &model.config;
  bound.vars.reserve(model.params.tensors.size());
  for (const auto& [name, tensor] : model.params.tensors) {
    bound.vars.emplace_back(name, tape.leaf(tensor));
  }
  return bound;
}

std::vector<double> spatial_features(const BoundingBox& box, double image_w, double image_h) {
  if (!(box.xmin < box.xmax) || !(box.ymin < box.ymax)) {
    throw DegenerateBox("box " + std::to_string(box.id) + " has zero width or height");
  }
  const double area_image = image_w * image_h;
  return {box.xmin / image_w, box.ymin / image_h, box.xmax / image_w, box.ymax / image_h,
          box.area() / area_image};
}

AttendResult attend(Tape& tape, const std::vector<std::string>& phrase, const Model& model,
                    const BoundParams& params, bool allow_null_fallback) {
  std::vector<std::int64_t> ids;
  if (phrase.empty()) {
    if (!allow_null_fallback) throw EmptyPhrase("attend called with an empty phrase");
    ids.push_back(Vocabulary::kNullId);
  } else {
    for (const std::string& w : phrase) ids.push_back(model.vocab.id_of(w));
  }

  const std::int64_t h = model.config.hidden_size;
  const std::int64_t e = model.config.embed_size;
  Var table = params.at("embed");
  std::vector<Var> embeds;
  embeds.reserve(ids.size());
  for (std::int64_t id : ids) embeds.push_back(tape.embedding_lookup(table, id));

  auto layer = [&](const std::vector<Var>& inputs, const std::string& fw, const std::string& bw) {
    std::vector<Var> f = run_lstm_direction(tape, inputs, params.at("lstm." + fw + ".w_ih"),
                                            params.at("lstm." + fw + ".w_hh"),
                                            params.at("lstm." + fw + ".bias"), h, false);
    std::vector<Var> b = run_lstm_direction(tape, inputs, params.at("lstm." + bw + ".w_ih"),
                                            params.at("lstm." + bw + ".w_hh"),
                                            params.at("lstm." + bw + ".bias"), h, true);
    return std::pair(std::move(f), std::move(b));
  };

  auto [f1, b1] = layer(embeds, "l1f", "l1b");
  std::vector<Var> layer1_out;
  layer1_out.reserve(embeds.size());
  for (std::size_t t = 0; t < embeds.size(); ++t) {
    std::vector<Var> parts = {f1[t], b1[t]};
    layer1_out.push_back(tape.concat(parts));
  }
  auto [f2, b2] = layer(layer1_out, "l2f", "l2b");

  // Per-word state is the concatenation of both directions of both
  // layers; a single row scores it.
  Var w_att = params.at("attend.w");
  std::vector<Var> scores;
  scores.reserve(embeds.size());
  for (std::size_t t = 0; t < embeds.size(); ++t) {
    std::vector<Var> parts = {f1[t], b1[t], f2[t], b2[t]};
    Var state = tape.concat(parts);
    scores.push_back(tape.matmul(w_att, state));
  }
  Var weights = tape.softmax(tape.concat(scores));

  Var embed_matrix = stack_rows(tape, embeds, e);
  Var output = tape.matmul(weights, embed_matrix);
  return {output, weights};
}

Var locate_from_text(Tape& tape, Var text_vec, const Scene& scene, const Model& model,
                     const BoundParams& params) {
  Var w_proj = params.at("locate.w_proj");
  Var w_score = params.at("locate.w_score");
  std::vector<Var> scores;
  scores.reserve(scene.boxes.size());
  for (const BoundingBox& box : scene.boxes) {
    Var features = tape.constant(box_input_features(box, scene, model.config.visual_dim));
    Var projected = tape.matmul(w_proj, features);
    Var fused = tape.elementwise_mul(projected, text_vec);
    Var normalized = tape.l2_normalize(fused);
    scores.push_back(tape.matmul(w_score, normalized));
  }
  return tape.softmax(tape.concat(scores));
}

Var locate(Tape& tape, const std::vector<std::string>& phrase, const Scene& scene,
           const Model& model, const BoundParams& params) {
  if (scene.boxes.empty()) throw Error("locate requires at least one box");
  Var text = attend(tape, phrase, model, params, false).output;
  return locate_from_text(tape, text, scene, model, params);
}

Var relate_from_text(Tape& tape, Var text_vec, const Scene& scene, Var input_dist,
                     const Model& model, const BoundParams& params) {
  check_distribution(tape.value(input_dist), "relate");
  const std::int64_t r = static_cast<std::int64_t>(scene.boxes.size());
  Var w_proj = params.at("relate.w_proj");
  Var w_score = params.at("relate.w_score");

  std::vector<Tensor> spatial;
  spatial.reserve(static_cast<std::size_t>(r));
  for (const BoundingBox& box : scene.boxes) {
    spatial.push_back(Tensor::vector(spatial_features(box, scene.width, scene.height)));
  }

  // Row j of the stacked matrix holds the scores s(i, j) for all i, so a
  // row softmax normalizes each input box j into a distribution over
  // output boxes i, and mixing is a vector-matrix product with the input.
  std::vector<Var> rows;
  rows.reserve(static_cast<std::size_t>(r));
  for (std::int64_t j = 0; j < r; ++j) {
    std::vector<Var> entries;
    entries.reserve(static_cast<std::size_t>(r));
    for (std::int64_t i = 0; i < r; ++i) {
      std::vector<double> pair_features = spatial[static_cast<std::size_t>(i)].values();
      for (double v : spatial[static_cast<std::size_t>(j)].values()) pair_features.push_back(v);
      Var features = tape.constant(Tensor::vector(std::move(pair_features)));
      Var projected = tape.matmul(w_proj, features);
      Var fused = tape.elementwise_mul(projected, text_vec);
      Var normalized = tape.l2_normalize(fused);
      entries.push_back(tape.matmul(w_score, normalized));
    }
    rows.push_back(tape.concat(entries));
  }

  if (model.config.relate_norm == RelateNorm::ColumnSoftmax) {
    std::vector<Var> normalized_rows;
    normalized_rows.reserve(rows.size());
    for (Var row : rows) normalized_rows.push_back(tape.softmax(row));
    Var matrix = stack_rows(tape, normalized_rows, r);
    return tape.matmul(input_dist, matrix);
  }
  Var matrix = stack_rows(tape, rows, r);
  return tape.normalize_sum(tape.matmul(input_dist, matrix));
}

Var relate(Tape& tape, const std::vector<std::string>& phrase, const Scene& scene,
           Var input_dist, const Model& model, const BoundParams& params) {
  Var text = attend(tape, phrase, model, params, true).output;
  return relate_from_text(tape, text, scene, input_dist, model, params);
}

Var intersect(Tape& tape, Var p, Var q) {
  check_distribution(tape.value(p), "intersect");
  check_distribution(tape.value(q), "intersect");
  Var product = tape.elementwise_mul(p, q);
  double mass = 0.0;
  const Tensor& prod = tape.value(product);
  for (std::int64_t i = 0; i < prod.size(); ++i) mass += prod.at(i);
  if (mass < 1e-12) throw VanishingMass("intersect: joint mass below 1e-12");
  return tape.normalize_sum(product);
}

ExecutionTrace execute_on_tape(Tape& tape, const ComputationGraph& graph, const Scene& scene,
                               const Model& model, const BoundParams& params) {
  ExecutionTrace trace;
  for (const GraphNode& node : graph.nodes) {
    try {
      switch (node.kind) {
        case NodeKind::Locate:
          trace.node_outputs[node.id] =
              locate(tape, node.phrase, scene, model, params);
          break;
        case NodeKind::Relate:
          trace.node_outputs[node.id] =
              relate(tape, node.phrase, scene, trace.node_outputs.at(node.inputs[0]), model,
                     params);
          break;
        case NodeKind::Intersect:
          trace.node_outputs[node.id] =
              intersect(tape, trace.node_outputs.at(node.inputs[0]),
                        trace.node_outputs.at(node.inputs[1]));
          break;
      }
    } catch (const Error& e) {
      throw Error("node " + std::to_string(node.id) + " (" + node_kind_name(node.kind) +
                  "): " + e.what());
    }
  }
  trace.root_output = trace.node_outputs.at(graph.root);
  return trace;
}

GroundingResult execute(const ComputationGraph& graph, const Scene& scene, const Model& model) {
  Tape tape;
  BoundParams params = bind_params(tape, model);
  ExecutionTrace trace = execute_on_tape(tape, graph, scene, model, params);
  GroundingResult result;
  result.root = graph.root;
  for (const auto& [id, var] : trace.node_outputs) {
    Tensor dist = tape.value(var);
    result.argmax[id] = dist.argmax();
    result.distributions[id] = std::move(dist);
  }
  return result;
}

std::string grounding_to_json(const ComputationGraph& graph, const GroundingResult& result) {
  nlohmann::json doc;
  doc["format"] = "groundnet-grounding";
  doc["version"] = 1;
  doc["root"] = result.root;
  nlohmann::json nodes = nlohmann::json::array();
  for (const GraphNode& node : graph.nodes) {
    nlohmann::json n;
    n["id"] = node.id;
    n["kind"] = node_kind_name(node.kind);
    n["phrase"] = node.phrase;
    n["distribution"] = result.distributions.at(node.id).values();
    n["argmax"] = result.argmax.at(node.id);
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

std::string grounding_to_dot(const ComputationGraph& graph, const GroundingResult& result) {
  std::ostringstream os;
  os << "digraph grounding {\n  rankdir=BT;\n";
  os.setf(std::ios::fixed);
  os.precision(3);
  for (const GraphNode& node : graph.nodes) {
    const Tensor& dist = result.distributions.at(node.id);
    const std::int64_t best = result.argmax.at(node.id);
    const double p = dist.at(best);
    std::string phrase;
    for (std::size_t i = 0; i < node.phrase.size(); ++i) {
      if (i) phrase += ' ';
      phrase += node.phrase[i];
    }
    os << "  n" << node.id << " [shape=box, style=filled, fillcolor=\"0.30 " << 0.15 + 0.6 * p
       << " 1.0\", label=\"" << node_kind_name(node.kind);
    if (!phrase.empty()) os << ": " << phrase;
    os << "\\nbox " << best << " p=" << p << "\"];\n";
  }
  for (const GraphNode& node : graph.nodes) {
    for (std::int32_t input : node.inputs) {
      os << "  n" << input << " -> n" << node.id << ";\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace groundnet
