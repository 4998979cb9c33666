#pragma once

// Shared helpers for the test suites: the reference tree for the sandwich
// expression, a random template-tree generator, and a small model/scene
// factory.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "groundnet/model.hpp"
#include "groundnet/rng.hpp"
#include "groundnet/scene.hpp"
#include "groundnet/treebank.hpp"

namespace testutil {

// Parse of "the half of a sandwich on the right side of a plate nearest a
// coffee mug", drawn with flat noun phrases the way the compiler consumes
// them.
inline const char* kSandwichTree =
    "(NP (NP (DT the) (NN half) (IN of) (DT a) (NN sandwich)) "
    "(PP (IN on) (DT the) (JJ right) (NN side) (IN of) "
    "(NP (NP (DT a) (NN plate)) (JJS nearest) (NP (DT a) (NN coffee) (NN mug)))))";

// Random tree from the synthetic template grammar
//   NP -> (NP (JJ w) (NN w)) | (NP NP (PP (IN w)+ NP))
// with all leaves drawn from a stopword-free vocabulary.
inline groundnet::ParseTree random_template_tree(groundnet::Rng& rng, int max_depth = 3) {
  static const std::vector<std::string> colors = {"red", "blue", "green", "amber"};
  static const std::vector<std::string> shapes = {"ball", "cube", "ring", "star"};
  static const std::vector<std::vector<std::string>> relations = {
      {"left", "of"}, {"right", "of"}, {"above"}, {"below"}, {"nearest"}};

  auto leaf = [&]() {
    groundnet::ParseTree jj{"JJ", {}, colors[rng.uniform_int(colors.size())], {}};
    groundnet::ParseTree nn{"NN", {}, shapes[rng.uniform_int(shapes.size())], {}};
    return groundnet::ParseTree{"NP", {std::move(jj), std::move(nn)}, std::nullopt, {}};
  };

  std::function<groundnet::ParseTree(int)> build = [&](int depth) -> groundnet::ParseTree {
    if (depth <= 1 || rng.bernoulli(0.35)) return leaf();
    groundnet::ParseTree pp{"PP", {}, std::nullopt, {}};
    for (const std::string& w : relations[rng.uniform_int(relations.size())]) {
      pp.children.push_back(groundnet::ParseTree{"IN", {}, w, {}});
    }
    pp.children.push_back(build(depth - 1));
    groundnet::ParseTree np{"NP", {leaf(), std::move(pp)}, std::nullopt, {}};
    return np;
  };

  // Round-trip through the canonical text so spans are assigned.
  return groundnet::read_ptb(groundnet::write_ptb(build(max_depth)));
}

// Tiny model over a fixed vocabulary, Xavier-initialized from the seed.
inline groundnet::Model small_model(std::uint64_t seed, std::int64_t hidden = 4,
                                    std::int64_t embed = 6, std::int64_t visual_dim = 4) {
  groundnet::Model model;
  model.config.hidden_size = hidden;
  model.config.embed_size = embed;
  model.config.visual_dim = visual_dim;
  model.vocab.words = {"<null>", "<unk>", "red",  "blue", "green", "amber", "ball",
                       "cube",   "ring",  "star", "left", "right", "above", "below",
                       "nearest", "of"};
  for (std::size_t i = 0; i < model.vocab.words.size(); ++i) {
    model.vocab.index[model.vocab.words[i]] = static_cast<std::int64_t>(i);
  }
  model.stopwords = {"a", "an", "the", "this", "that", "these", "those", "of"};
  groundnet::Rng rng(seed, 5);
  model.params = groundnet::init_params(model.config, model.vocab.size(), rng);
  return model;
}

// Random scene with n boxes on a 200x150 image; features in [-1, 1].
inline groundnet::Scene random_scene(groundnet::Rng& rng, int n_boxes,
                                     std::int64_t visual_dim = 4) {
  groundnet::Scene scene;
  scene.id = 0;
  scene.width = 200;
  scene.height = 150;
  for (int i = 0; i < n_boxes; ++i) {
    groundnet::BoundingBox b;
    b.id = i;
    const double x = rng.uniform(0, 150);
    const double y = rng.uniform(0, 110);
    b.xmin = x;
    b.ymin = y;
    b.xmax = x + rng.uniform(10, 45);
    b.ymax = y + rng.uniform(10, 35);
    for (std::int64_t f = 0; f < visual_dim; ++f) b.visual_features.push_back(rng.uniform(-1, 1));
    scene.boxes.push_back(std::move(b));
  }
  scene.expression = {"red", "ball"};
  scene.parse = "(NP (JJ red) (NN ball))";
  scene.target_id = 0;
  return scene;
}

}  // namespace testutil
