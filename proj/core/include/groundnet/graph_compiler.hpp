#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "groundnet/treebank.hpp"

namespace groundnet {

// Function words dropped when decorating graph nodes with phrases.
// The default list covers determiners and "of"; a custom list can be
// loaded from a file with one word per line.
struct Lexicon {
  std::set<std::string> stopwords;

  static Lexicon defaults();
  static Lexicon from_file(const std::string& path);

  bool is_stopword(const std::string& word) const { return stopwords.count(word) > 0; }
  std::vector<std::string> filter(const std::vector<std::string>& words) const;
};

enum class NodeKind { Locate, Relate, Intersect };

const char* node_kind_name(NodeKind kind);
NodeKind node_kind_from_name(const std::string& name);

// One node of the compiled computation graph. Locate takes no inputs,
// Relate exactly one, Intersect exactly two. Locate always carries a
// non-empty phrase; Relate may carry an empty phrase when no connecting
// words exist between the two noun phrases it joins.
struct GraphNode {
  std::int32_t id = -1;
  NodeKind kind = NodeKind::Locate;
  std::vector<std::string> phrase;
  std::vector<std::int32_t> inputs;
  TokenSpan source_span;
};

// Tree-shaped DAG over GraphNodes: every non-root node feeds exactly one
// consumer. Node ids are dense [0, nodes.size()) in creation order
// (children before parents), so id order is a topological order.
struct ComputationGraph {
  std::vector<GraphNode> nodes;
  std::int32_t root = -1;
  std::vector<std::string> expression;

  std::int64_t count(NodeKind kind) const;
  bool operator==(const ComputationGraph&) const = default;
};

// Leftmost noun phrase (tag prefix "NP") among the proper descendants of
// tree whose span lies inside region; at equal starts the widest span
// wins, then the shallowest node. Returns nullptr when no such
// descendant exists. The returned pointer aliases into tree.
const ParseTree* find_np(const ParseTree& tree, const TokenSpan& region);

// Connecting phrase between two noun phrases: the content words of the
// tokens in [left_np.span.end, right_np.span.start). Raises
// OverlappingSpans when left_np does not end at or before right_np.
std::vector<std::string> find_pp(const ParseTree& tree, const ParseTree& left_np,
                                 const ParseTree& right_np, const Lexicon& lexicon);

// Compiles a parse tree into a computation graph:
//   - no NP descendant: a single Locate over the filtered constituent text
//     (EmptyPhraseAtLocate if nothing survives filtering);
//   - two NPs: Intersect(compile(left), Relate[gap words](compile(right)));
//   - one NP: recurse into it, joined with a Locate over any residual
//     content words via Intersect.
// An NP spanning the whole current constituent is skipped, which bounds
// the recursion. Pure: identical trees compile to identical graphs.
ComputationGraph generate_computation_graph(const ParseTree& tree,
                                            const Lexicon& lexicon = Lexicon::defaults());

enum class GraphFormat { Dot, Json };

// Deterministic serialization. DOT nodes are labeled "kind: phrase";
// JSON round-trips byte-identically through import_graph_json.
std::string export_graph(const ComputationGraph& graph, GraphFormat format);
ComputationGraph import_graph_json(const std::string& text);

}  // namespace groundnet
