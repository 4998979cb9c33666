#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "groundnet/errors.hpp"
#include "groundnet/graph_compiler.hpp"
#include "groundnet/rng.hpp"
#include "test_util.hpp"

using namespace groundnet;

namespace {

const GraphNode& node_of(const ComputationGraph& g, std::int32_t id) {
  return g.nodes[static_cast<std::size_t>(id)];
}

std::vector<std::string> phrase(const char* text) {
  std::vector<std::string> out;
  std::string word;
  for (const char* p = text;; ++p) {
    if (*p == ' ' || *p == '\0') {
      if (!word.empty()) out.push_back(word);
      word.clear();
      if (*p == '\0') break;
    } else {
      word += *p;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("find_np picks the leftmost outermost noun phrase") {
  const ParseTree t = read_ptb(testutil::kSandwichTree);
  const ParseTree* left = find_np(t, t.span);
  REQUIRE(left != nullptr);
  CHECK(left->span == TokenSpan{0, 5});  // "the half of a sandwich"

  const ParseTree* right = find_np(t, {5, 16});
  REQUIRE(right != nullptr);
  CHECK(right->span == TokenSpan{10, 16});  // "a plate nearest a coffee mug"

  const ParseTree* inner = find_np(t, {12, 16});
  REQUIRE(inner != nullptr);
  CHECK(inner->span == TokenSpan{13, 16});  // "a coffee mug"
}

TEST_CASE("find_np returns none without an NP descendant") {
  const ParseTree leaf = read_ptb("(NN mug)");
  CHECK(find_np(leaf, leaf.span) == nullptr);

  // Proper descendants only: an NP root does not count for itself.
  const ParseTree np_root = read_ptb("(NP (DT the) (JJ red) (NN ball))");
  CHECK(find_np(np_root, np_root.span) == nullptr);
}

TEST_CASE("find_np prefers wider spans at the same start, then shallower") {
  const ParseTree t = read_ptb("(X (NP (NP (DT a) (NN dog)) (PP (IN near) (NP (DT a) (NN cat)))))");
  const ParseTree* np = find_np(t, t.span);
  REQUIRE(np != nullptr);
  CHECK(np->span == TokenSpan{0, 5});  // outer NP, not the nested "a dog"
}

TEST_CASE("find_pp extracts filtered gap words") {
  const ParseTree t = read_ptb(testutil::kSandwichTree);
  const ParseTree* left = find_np(t, t.span);
  const ParseTree* right = find_np(t, {left->span.end, t.span.end});
  REQUIRE(left);
  REQUIRE(right);
  const Lexicon lex = Lexicon::defaults();
  CHECK(find_pp(t, *left, *right, lex) == phrase("on right side"));

  // Adjacent noun phrases have an empty connecting phrase.
  const ParseTree adj = read_ptb("(X (NP (NN dog)) (NP (NN cat)))");
  CHECK(find_pp(adj, adj.children[0], adj.children[1], lex).empty());

  // A gap of nothing but determiners filters to empty.
  const ParseTree dets = read_ptb("(X (NP (NN dog)) (DT the) (DT a) (NP (NN cat)))");
  CHECK(find_pp(dets, dets.children[0], dets.children[3], lex).empty());

  CHECK_THROWS_AS(find_pp(t, *right, *left, lex), OverlappingSpans);
}

TEST_CASE("sandwich expression compiles to the reference topology") {
  const ComputationGraph g = generate_computation_graph(read_ptb(testutil::kSandwichTree));
  CHECK(g.count(NodeKind::Locate) == 3);
  CHECK(g.count(NodeKind::Relate) == 2);
  CHECK(g.count(NodeKind::Intersect) == 2);
  REQUIRE(g.nodes.size() == 7);

  // Root: Intersect(Locate["half sandwich"], Relate["on right side"](...))
  const GraphNode& root = node_of(g, g.root);
  REQUIRE(root.kind == NodeKind::Intersect);
  const GraphNode& left = node_of(g, root.inputs[0]);
  const GraphNode& rel_outer = node_of(g, root.inputs[1]);
  CHECK(left.kind == NodeKind::Locate);
  CHECK(left.phrase == phrase("half sandwich"));
  REQUIRE(rel_outer.kind == NodeKind::Relate);
  CHECK(rel_outer.phrase == phrase("on right side"));

  // Inner: Intersect(Locate["plate"], Relate["nearest"](Locate["coffee mug"]))
  const GraphNode& inner = node_of(g, rel_outer.inputs[0]);
  REQUIRE(inner.kind == NodeKind::Intersect);
  const GraphNode& plate = node_of(g, inner.inputs[0]);
  const GraphNode& rel_inner = node_of(g, inner.inputs[1]);
  CHECK(plate.phrase == phrase("plate"));
  REQUIRE(rel_inner.kind == NodeKind::Relate);
  CHECK(rel_inner.phrase == phrase("nearest"));
  const GraphNode& mug = node_of(g, rel_inner.inputs[0]);
  CHECK(mug.phrase == phrase("coffee mug"));
}

TEST_CASE("plain noun phrase compiles to a single Locate") {
  const ComputationGraph g = generate_computation_graph(read_ptb("(NP (DT the) (JJ red) (NN ball))"));
  REQUIRE(g.nodes.size() == 1);
  CHECK(g.nodes[0].kind == NodeKind::Locate);
  CHECK(g.nodes[0].phrase == phrase("red ball"));
  CHECK(g.root == 0);
}

TEST_CASE("single embedded NP joins residual words via Intersect") {
  // "dog in front" with one NP sub-span and surviving residual words.
  const ComputationGraph g =
      generate_computation_graph(read_ptb("(X (NP (DT the) (NN dog)) (IN in) (NN front))"));
  REQUIRE(g.nodes.size() == 3);
  const GraphNode& root = node_of(g, g.root);
  REQUIRE(root.kind == NodeKind::Intersect);
  CHECK(node_of(g, root.inputs[0]).phrase == phrase("in front"));
  CHECK(node_of(g, root.inputs[1]).phrase == phrase("dog"));
  CHECK(g.count(NodeKind::Relate) == 0);

  // All residual words filtered away: the recursion is returned directly.
  const ComputationGraph direct =
      generate_computation_graph(read_ptb("(X (DT the) (NP (DT the) (NN dog)))"));
  REQUIRE(direct.nodes.size() == 1);
  CHECK(direct.nodes[0].phrase == phrase("dog"));
}

TEST_CASE("unary NP chain terminates through the self-span guard") {
  const ComputationGraph g =
      generate_computation_graph(read_ptb("(NP (NP (NP (DT the) (NN dog))))"));
  REQUIRE(g.nodes.size() == 1);
  CHECK(g.nodes[0].phrase == phrase("dog"));
}

TEST_CASE("vacuous constituent raises EmptyPhraseAtLocate") {
  CHECK_THROWS_AS(generate_computation_graph(read_ptb("(NP (DT the))")), EmptyPhraseAtLocate);
}

TEST_CASE("compiler invariants hold on random template trees") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const ParseTree t = testutil::random_template_tree(rng, 4);
    const ComputationGraph g = generate_computation_graph(t);
    CHECK(g.count(NodeKind::Locate) == g.count(NodeKind::Intersect) + 1);
    CHECK(g.count(NodeKind::Relate) == g.count(NodeKind::Intersect));

    // Locate spans are pairwise disjoint on template trees.
    std::vector<TokenSpan> locate_spans;
    for (const GraphNode& n : g.nodes) {
      if (n.kind == NodeKind::Locate) locate_spans.push_back(n.source_span);
    }
    for (std::size_t a = 0; a < locate_spans.size(); ++a) {
      for (std::size_t b = a + 1; b < locate_spans.size(); ++b) {
        const bool disjoint = locate_spans[a].end <= locate_spans[b].start ||
                              locate_spans[b].end <= locate_spans[a].start;
        CHECK(disjoint);
      }
    }

    // Exactly one node (the root) is consumed by nobody.
    std::set<std::int32_t> consumed;
    for (const GraphNode& n : g.nodes) {
      for (std::int32_t in : n.inputs) CHECK(consumed.insert(in).second);
    }
    CHECK(consumed.count(g.root) == 0);
    CHECK(consumed.size() + 1 == g.nodes.size());
  }
}

TEST_CASE("compilation is pure") {
  const ParseTree t = read_ptb(testutil::kSandwichTree);
  CHECK(generate_computation_graph(t) == generate_computation_graph(t));
}

TEST_CASE("DOT export") {
  const ComputationGraph single = generate_computation_graph(read_ptb("(NP (JJ red) (NN ball))"));
  const std::string dot = export_graph(single, GraphFormat::Dot);
  CHECK(dot.find("n0 [shape=box, label=\"Locate: red ball\"]") != std::string::npos);

  const ComputationGraph fig = generate_computation_graph(read_ptb(testutil::kSandwichTree));
  const std::string fig_dot = export_graph(fig, GraphFormat::Dot);
  int node_lines = 0, edge_lines = 0;
  for (std::size_t pos = 0; (pos = fig_dot.find('\n', pos + 1)) != std::string::npos;) {
    ++node_lines;
  }
  for (std::size_t pos = 0; (pos = fig_dot.find("->", pos + 1)) != std::string::npos;) {
    ++edge_lines;
  }
  CHECK(edge_lines == 6);  // 7-node tree
  CHECK(fig_dot.find("Relate: on right side") != std::string::npos);
}

TEST_CASE("JSON export round-trips byte-identically") {
  const ComputationGraph g = generate_computation_graph(read_ptb(testutil::kSandwichTree));
  const std::string json_text = export_graph(g, GraphFormat::Json);
  const ComputationGraph back = import_graph_json(json_text);
  CHECK(back == g);
  CHECK(export_graph(back, GraphFormat::Json) == json_text);
}
