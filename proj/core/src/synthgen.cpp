#include "groundnet/synthgen.hpp"

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

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

ParseTree leaf_np(const std::string& color, const std::string& shape) {
  ParseTree jj{"JJ", {}, color, {}};
  ParseTree nn{"NN", {}, shape, {}};
  return ParseTree{"NP", {std::move(jj), std::move(nn)}, std::nullopt, {}};
}

ParseTree relational_np(ParseTree subject, const std::string& relation, ParseTree reference) {
  ParseTree pp{"PP", {}, std::nullopt, {}};
  for (const std::string& w : split_words(relation)) {
    pp.children.push_back(ParseTree{"IN", {}, w, {}});
  }
  pp.children.push_back(std::move(reference));
  return ParseTree{"NP", {std::move(subject), std::move(pp)}, std::nullopt, {}};
}

// Token spans are assigned by the reader; rebuilding through the
// canonical text keeps every span consistent.
ParseTree finalize(const ParseTree& tree) { return read_ptb(write_ptb(tree)); }

std::int64_t index_of(const std::vector<std::string>& vocab, const std::string& word) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == word) return static_cast<std::int64_t>(i);
  }
  return -1;
}

double center_distance(const BoundingBox& a, const BoundingBox& b) {
  const double dx = a.center_x() - b.center_x();
  const double dy = a.center_y() - b.center_y();
  return std::sqrt(dx * dx + dy * dy);
}

bool directional_holds(const std::string& relation, const BoundingBox& x, const BoundingBox& y) {
  if (relation == "left of") return x.center_x() < y.center_x();
  if (relation == "right of") return x.center_x() > y.center_x();
  if (relation == "above") return x.center_y() < y.center_y();
  if (relation == "below") return x.center_y() > y.center_y();
  throw Unsatisfiable("unknown relation: " + relation);
}

struct TemplateNp {
  std::string color, shape;
  std::string relation;              // empty for attribute-only
  const ParseTree* reference = nullptr;  // embedded NP, when relational
};

TemplateNp parse_template_np(const ParseTree& node) {
  if (!node.label_has_prefix("NP")) throw Unsatisfiable("expression node is not an NP");
  TemplateNp out;
  if (node.children.size() == 2 && node.children[0].is_leaf() && node.children[1].is_leaf()) {
    out.color = *node.children[0].token;
    out.shape = *node.children[1].token;
    return out;
  }
  if (node.children.size() == 2 && node.children[1].label_has_prefix("PP")) {
    TemplateNp subject = parse_template_np(node.children[0]);
    out.color = subject.color;
    out.shape = subject.shape;
    if (!subject.relation.empty()) {
      throw Unsatisfiable("subject of a relation must be an attribute phrase");
    }
    const ParseTree& pp = node.children[1];
    std::string relation;
    const ParseTree* reference = nullptr;
    for (const ParseTree& child : pp.children) {
      if (child.is_leaf()) {
        if (!relation.empty()) relation += ' ';
        relation += *child.token;
      } else {
        if (reference) throw Unsatisfiable("relation has more than one reference phrase");
        reference = &child;
      }
    }
    if (relation.empty() || !reference) throw Unsatisfiable("malformed prepositional phrase");
    out.relation = std::move(relation);
    out.reference = reference;
    return out;
  }
  throw Unsatisfiable("expression does not follow the attribute/relation template");
}

struct Grounder {
  const Scene& scene;
  const SceneObjects& objects;
  const WorldSpec& spec;

  std::vector<std::int32_t> attribute_matches(const std::string& color,
                                              const std::string& shape) const {
    const std::int64_t ci = index_of(spec.colors, color);
    const std::int64_t si = index_of(spec.shapes, shape);
    if (ci < 0) throw Unsatisfiable("unknown color: " + color);
    if (si < 0) throw Unsatisfiable("unknown shape: " + shape);
    std::vector<std::int32_t> out;
    for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
      if (objects.color[i] == ci && objects.shape[i] == si) {
        out.push_back(scene.boxes[i].id);
      }
    }
    return out;
  }

  LogicalGrounding ground(const ParseTree& node) const {
    const TemplateNp np = parse_template_np(node);
    std::vector<std::int32_t> candidates = attribute_matches(np.color, np.shape);
    if (np.relation.empty()) {
      if (candidates.empty()) throw Unsatisfiable(np.color + " " + np.shape + ": no such object");
      if (candidates.size() > 1) {
        throw NotUnique(np.color + " " + np.shape + ": " + std::to_string(candidates.size()) +
                        " objects match");
      }
      return {candidates.front(), {}};
    }

    const LogicalGrounding ref = ground(*np.reference);
    const BoundingBox& ref_box = *scene.box_by_id(ref.target_id);
    std::vector<std::int32_t> satisfiers;
    if (np.relation == "nearest") {
      // The nearest candidate to the reference; the reference itself is
      // never its own nearest object. An exact distance tie is ambiguous.
      double best = 0.0;
      bool tie = false;
      std::int32_t best_id = -1;
      for (std::int32_t id : candidates) {
        if (id == ref.target_id) continue;
        const double d = center_distance(*scene.box_by_id(id), ref_box);
        if (best_id < 0 || d < best) {
          best = d;
          best_id = id;
          tie = false;
        } else if (d == best) {
          tie = true;
        }
      }
      if (best_id < 0) throw Unsatisfiable("no candidate for 'nearest'");
      if (tie) throw NotUnique("distance tie for 'nearest'");
      satisfiers.push_back(best_id);
    } else {
      for (std::int32_t id : candidates) {
        if (id == ref.target_id) continue;
        if (directional_holds(np.relation, *scene.box_by_id(id), ref_box)) {
          satisfiers.push_back(id);
        }
      }
    }
    if (satisfiers.empty()) throw Unsatisfiable("no object satisfies '" + np.relation + "'");
    if (satisfiers.size() > 1) {
      throw NotUnique(std::to_string(satisfiers.size()) + " objects satisfy '" + np.relation +
                      "'");
    }
    LogicalGrounding out;
    out.target_id = satisfiers.front();
    out.supporting_ids = ref.supporting_ids;
    out.supporting_ids.insert(ref.target_id);
    return out;
  }
};

}  // namespace

void WorldSpec::validate() const {
  if (shapes.empty() || colors.empty() || relations.empty()) {
    throw Error("world spec vocabularies must be non-empty");
  }
  if (feature_noise_sigma < 0) throw Error("feature noise sigma must be >= 0");
  if (visual_dim != static_cast<std::int64_t>(shapes.size() + colors.size())) {
    throw Error("visual_dim must equal |shapes| + |colors| = " +
                std::to_string(shapes.size() + colors.size()));
  }
  if (boxes_min < 1 || boxes_max < boxes_min) throw Error("invalid boxes-per-scene range");
  if (boxes_max > grid_w * grid_h) throw Error("grid too small for boxes_max");
  if (max_depth < 1) throw Error("max_depth must be >= 1");
  if (attr_pool_min < 1 || attr_pool_max < attr_pool_min) throw Error("invalid attr pool range");
  if (cell_px <= 0 || box_px <= 0 || box_px + 2 * jitter_px > cell_px) {
    throw Error("box_px plus jitter must fit inside cell_px");
  }
  const Lexicon lex = Lexicon::defaults();
  for (const auto& vocab : {shapes, colors}) {
    for (const std::string& w : vocab) {
      if (lex.is_stopword(w)) throw Error("vocabulary word is a function word: " + w);
    }
  }
  std::set<std::string> filtered_relations;
  for (const std::string& r : relations) {
    const auto kept = lex.filter(split_words(r));
    if (kept.empty()) throw Error("relation '" + r + "' has no content words");
    std::string key;
    for (const std::string& w : kept) key += w + " ";
    if (!filtered_relations.insert(key).second) {
      throw Error("relations collide after function-word filtering: " + r);
    }
  }
}

WorldSpec WorldSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open world spec: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("malformed world spec " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "groundnet-world" || doc.value("version", 0) != 1) {
    throw Error("not a groundnet-world v1 file: " + path);
  }
  WorldSpec spec;
  spec.shapes = doc.at("shapes").get<std::vector<std::string>>();
  spec.colors = doc.at("colors").get<std::vector<std::string>>();
  if (doc.contains("relations")) {
    spec.relations = doc.at("relations").get<std::vector<std::string>>();
  }
  spec.grid_w = doc.value("grid_w", spec.grid_w);
  spec.grid_h = doc.value("grid_h", spec.grid_h);
  spec.cell_px = doc.value("cell_px", spec.cell_px);
  spec.box_px = doc.value("box_px", spec.box_px);
  spec.jitter_px = doc.value("jitter_px", spec.jitter_px);
  spec.boxes_min = doc.value("boxes_min", spec.boxes_min);
  spec.boxes_max = doc.value("boxes_max", spec.boxes_max);
  spec.visual_dim = doc.value("visual_dim",
                              static_cast<std::int64_t>(spec.shapes.size() + spec.colors.size()));
  spec.feature_noise_sigma = doc.value("feature_noise_sigma", spec.feature_noise_sigma);
  spec.max_depth = doc.value("max_depth", spec.max_depth);
  spec.attr_pool_min = doc.value("attr_pool_min", spec.attr_pool_min);
  spec.attr_pool_max = doc.value("attr_pool_max", spec.attr_pool_max);
  spec.validate();
  return spec;
}

std::string WorldSpec::to_json() const {
  json doc;
  doc["format"] = "groundnet-world";
  doc["version"] = 1;
  doc["shapes"] = shapes;
  doc["colors"] = colors;
  doc["relations"] = relations;
  doc["grid_w"] = grid_w;
  doc["grid_h"] = grid_h;
  doc["cell_px"] = cell_px;
  doc["box_px"] = box_px;
  doc["jitter_px"] = jitter_px;
  doc["boxes_min"] = boxes_min;
  doc["boxes_max"] = boxes_max;
  doc["visual_dim"] = visual_dim;
  doc["feature_noise_sigma"] = feature_noise_sigma;
  doc["max_depth"] = max_depth;
  doc["attr_pool_min"] = attr_pool_min;
  doc["attr_pool_max"] = attr_pool_max;
  return doc.dump(2) + "\n";
}

LogicalGrounding logical_ground(const ParseTree& expression, const Scene& scene,
                                const SceneObjects& objects, const WorldSpec& spec) {
  if (objects.shape.size() != scene.boxes.size() || objects.color.size() != scene.boxes.size()) {
    throw Error("object labels do not cover every box");
  }
  const Grounder grounder{scene, objects, spec};
  return grounder.ground(expression);
}

SceneObjects decode_objects(const Scene& scene, const WorldSpec& spec) {
  const std::int64_t s = static_cast<std::int64_t>(spec.shapes.size());
  const std::int64_t c = static_cast<std::int64_t>(spec.colors.size());
  SceneObjects objects;
  for (const BoundingBox& box : scene.boxes) {
    if (static_cast<std::int64_t>(box.visual_features.size()) != s + c) {
      throw Error("scene features do not match the world spec");
    }
    auto argmax = [&](std::int64_t offset, std::int64_t len) {
      std::int64_t best = 0;
      for (std::int64_t i = 1; i < len; ++i) {
        if (box.visual_features[static_cast<std::size_t>(offset + i)] >
            box.visual_features[static_cast<std::size_t>(offset + best)]) {
          best = i;
        }
      }
      return best;
    };
    objects.shape.push_back(argmax(0, s));
    objects.color.push_back(argmax(s, c));
  }
  return objects;
}

Scene gen_scene(const WorldSpec& spec, Rng& rng, std::int64_t scene_id, int max_attempts) {
  spec.validate();

  // Layout: distinct grid cells, one box per cell, jittered placement.
  const std::int64_t n =
      spec.boxes_min + static_cast<std::int64_t>(rng.uniform_int(
                           static_cast<std::uint64_t>(spec.boxes_max - spec.boxes_min + 1)));
  std::vector<std::int64_t> cells(static_cast<std::size_t>(spec.grid_w * spec.grid_h));
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<std::int64_t>(i);
  for (std::size_t i = cells.size(); i > 1; --i) {
    std::swap(cells[i - 1], cells[rng.uniform_int(i)]);
  }

  Scene scene;
  scene.id = scene_id;
  scene.width = static_cast<double>(spec.grid_w) * spec.cell_px;
  scene.height = static_cast<double>(spec.grid_h) * spec.cell_px;

  // A small per-scene attribute pool makes repeated (color, shape) pairs
  // likely, so attribute words alone often underdetermine the target.
  const std::int64_t pool_size =
      spec.attr_pool_min + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(
                               spec.attr_pool_max - spec.attr_pool_min + 1)));
  std::vector<std::pair<std::int64_t, std::int64_t>> pool;
  for (std::int64_t tries = 0; static_cast<std::int64_t>(pool.size()) < pool_size && tries < 64;
       ++tries) {
    std::pair<std::int64_t, std::int64_t> attrs = {
        static_cast<std::int64_t>(rng.uniform_int(spec.colors.size())),
        static_cast<std::int64_t>(rng.uniform_int(spec.shapes.size()))};
    if (std::find(pool.begin(), pool.end(), attrs) == pool.end()) pool.push_back(attrs);
  }

  SceneObjects objects;
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t cell = cells[static_cast<std::size_t>(i)];
    const std::int64_t cx = cell % spec.grid_w;
    const std::int64_t cy = cell / spec.grid_w;
    const double jx = rng.uniform(-spec.jitter_px, spec.jitter_px);
    const double jy = rng.uniform(-spec.jitter_px, spec.jitter_px);
    const double center_x = (static_cast<double>(cx) + 0.5) * spec.cell_px + jx;
    const double center_y = (static_cast<double>(cy) + 0.5) * spec.cell_px + jy;

    const auto [color, shape] = pool[rng.uniform_int(pool.size())];
    BoundingBox box;
    box.id = static_cast<std::int32_t>(i);
    box.xmin = center_x - spec.box_px / 2;
    box.xmax = center_x + spec.box_px / 2;
    box.ymin = center_y - spec.box_px / 2;
    box.ymax = center_y + spec.box_px / 2;
    box.visual_features.assign(static_cast<std::size_t>(spec.visual_dim), 0.0);
    box.visual_features[static_cast<std::size_t>(shape)] = 1.0;
    box.visual_features[spec.shapes.size() + static_cast<std::size_t>(color)] = 1.0;
    for (double& f : box.visual_features) f += rng.gaussian(0.0, spec.feature_noise_sigma);
    scene.boxes.push_back(std::move(box));
    objects.shape.push_back(shape);
    objects.color.push_back(color);
  }

  auto attrs_of = [&](std::int64_t i) {
    return std::pair(objects.color[static_cast<std::size_t>(i)],
                     objects.shape[static_cast<std::size_t>(i)]);
  };
  auto count_matches = [&](std::pair<std::int64_t, std::int64_t> attrs) {
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      if (attrs_of(i) == attrs) ++count;
    }
    return count;
  };
  auto leaf_for = [&](std::int64_t i) {
    const auto [c, s] = attrs_of(i);
    return leaf_np(spec.colors[static_cast<std::size_t>(c)],
                   spec.shapes[static_cast<std::size_t>(s)]);
  };

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const std::int64_t depth_cap = std::min<std::int64_t>(spec.max_depth, n);
    const std::int64_t depth =
        1 + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(depth_cap)));

    // Anchor the expression on a chain of distinct boxes so every level
    // is satisfiable; the evaluator then decides uniqueness.
    std::vector<std::int64_t> chain;
    while (static_cast<std::int64_t>(chain.size()) < depth) {
      const std::int64_t pick = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      if (std::find(chain.begin(), chain.end(), pick) == chain.end()) chain.push_back(pick);
    }

    ParseTree expr = leaf_for(chain.back());
    std::vector<std::string> used_relations;
    for (std::int64_t k = depth - 2; k >= 0; --k) {
      const std::string& rel =
          spec.relations[rng.uniform_int(spec.relations.size())];
      used_relations.push_back(rel);
      expr = relational_np(leaf_for(chain[static_cast<std::size_t>(k)]), rel, std::move(expr));
    }
    expr = finalize(expr);

    LogicalGrounding grounding;
    try {
      grounding = logical_ground(expr, scene, objects, spec);
    } catch (const NotUnique&) {
      continue;
    } catch (const Unsatisfiable&) {
      continue;
    }
    // A relation must be informative: the outer attribute phrase alone
    // must not already identify the target.
    if (depth >= 2 && count_matches(attrs_of(chain.front())) < 2) continue;
    if (grounding.supporting_ids.count(grounding.target_id)) continue;

    scene.expression = leaf_tokens(expr);
    scene.parse = write_ptb(expr);
    scene.target_id = grounding.target_id;
    scene.supporting_ids = grounding.supporting_ids;
    validate_scene(scene, static_cast<std::size_t>(scene_id));
    return scene;
  }
  throw GenerationExhausted("no identifying expression found for scene " +
                            std::to_string(scene_id) + " after " + std::to_string(max_attempts) +
                            " attempts");
}

DatasetSplits gen_dataset(const WorldSpec& spec, std::uint64_t seed, std::int64_t num_train,
                          std::int64_t num_val, std::int64_t num_test) {
  spec.validate();
  const std::int64_t total = num_train + num_val + num_test;
  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(total));
  Rng base(seed);
  for (std::int64_t k = 0; k < total; ++k) {
    Scene scene;
    bool made = false;
    for (std::uint64_t resample = 0; resample < 100 && !made; ++resample) {
      Rng scene_rng = base.split(static_cast<std::uint64_t>(k)).split(resample);
      try {
        scene = gen_scene(spec, scene_rng, k);
        made = true;
      } catch (const GenerationExhausted&) {
        // new layout, next substream
      }
    }
    if (!made) {
      throw GenerationExhausted("scene " + std::to_string(k) +
                                " could not be generated after 100 layout resamples");
    }
    scenes.push_back(std::move(scene));
  }
  DatasetSplits splits;
  splits.train.assign(scenes.begin(), scenes.begin() + num_train);
  splits.validation.assign(scenes.begin() + num_train, scenes.begin() + num_train + num_val);
  splits.test.assign(scenes.begin() + num_train + num_val, scenes.end());
  return splits;
}

}  // namespace groundnet
