#include "groundnet/graph_compiler.hpp"

#include <fstream>
#include <sstream>

#include "groundnet/errors.hpp"
#include "json.hpp"

namespace groundnet {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

struct NpCandidate {
  const ParseTree* node = nullptr;
  int depth = 0;
};

void collect_nps(const ParseTree& node, const TokenSpan& region, int depth, bool is_root,
                 std::vector<NpCandidate>& out) {
  if (!is_root && node.label_has_prefix("NP") && region.contains(node.span)) {
    out.push_back({&node, depth});
  }
  for (const ParseTree& child : node.children) {
    collect_nps(child, region, depth + 1, false, out);
  }
}

// Selection order: earliest start, then widest span, then shallowest
// node. Scanning left to right and keeping the outermost constituent at
// the winning position makes the choice unique for any tree.
const ParseTree* select_np(const ParseTree& tree, const TokenSpan& region,
                           const std::optional<TokenSpan>& excluded_span) {
  std::vector<NpCandidate> candidates;
  collect_nps(tree, region, 0, true, candidates);
  const NpCandidate* best = nullptr;
  for (const NpCandidate& c : candidates) {
    if (excluded_span && c.node->span == *excluded_span) continue;
    if (!best) {
      best = &c;
      continue;
    }
    const TokenSpan& s = c.node->span;
    const TokenSpan& b = best->node->span;
    if (s.start != b.start) {
      if (s.start < b.start) best = &c;
    } else if (s.end != b.end) {
      if (s.end > b.end) best = &c;
    } else if (c.depth < best->depth) {
      best = &c;
    }
  }
  return best ? best->node : nullptr;
}

class Compiler {
 public:
  Compiler(const ParseTree& tree, const Lexicon& lexicon) : tree_(tree), lexicon_(lexicon) {}

  ComputationGraph run() {
    ComputationGraph graph;
    graph.expression = leaf_tokens(tree_);
    graph_ = &graph;
    graph.root = compile(tree_);
    return graph;
  }

 private:
  std::int32_t add_node(NodeKind kind, std::vector<std::string> phrase,
                        std::vector<std::int32_t> inputs, TokenSpan span) {
    GraphNode node;
    node.id = static_cast<std::int32_t>(graph_->nodes.size());
    node.kind = kind;
    node.phrase = std::move(phrase);
    node.inputs = std::move(inputs);
    node.source_span = span;
    graph_->nodes.push_back(std::move(node));
    return graph_->nodes.back().id;
  }

  std::vector<std::string> filtered_tokens(const TokenSpan& span) const {
    return lexicon_.filter(yield_tokens(tree_, span));
  }

  // Content words of `span` minus the sub-range `hole`.
  std::vector<std::string> filtered_tokens_excluding(const TokenSpan& span,
                                                     const TokenSpan& hole) const {
    std::vector<std::string> words = filtered_tokens({span.start, hole.start});
    for (std::string& w : filtered_tokens({hole.end, span.end})) words.push_back(std::move(w));
    return words;
  }

  std::int32_t compile(const ParseTree& node) {
    // An NP covering the whole constituent would recurse forever; treat
    // it as absent so a smaller NP (or the base case) takes over.
    const ParseTree* left_np = select_np(node, node.span, node.span);
    if (!left_np) {
      std::vector<std::string> phrase = filtered_tokens(node.span);
      if (phrase.empty()) {
        throw EmptyPhraseAtLocate(
            "constituent over tokens [" + std::to_string(node.span.start) + "," +
            std::to_string(node.span.end) + ") has no content words for a Locate node");
      }
      return add_node(NodeKind::Locate, std::move(phrase), {}, node.span);
    }

    const ParseTree* right_np =
        select_np(node, {left_np->span.end, node.span.end}, std::nullopt);
    if (!right_np) {
      // Single noun phrase: recurse into it and keep any residual content
      // words as an extra Locate joined by Intersect.
      const std::int32_t sub = compile(*left_np);
      std::vector<std::string> residual = filtered_tokens_excluding(node.span, left_np->span);
      if (residual.empty()) return sub;
      const std::int32_t residual_locate =
          add_node(NodeKind::Locate, std::move(residual), {}, node.span);
      return add_node(NodeKind::Intersect, {}, {residual_locate, sub}, node.span);
    }

    std::vector<std::string> relate_phrase = find_pp(tree_, *left_np, *right_np, lexicon_);
    const std::int32_t left_cg = compile(*left_np);
    const std::int32_t right_cg = compile(*right_np);
    const std::int32_t relate =
        add_node(NodeKind::Relate, std::move(relate_phrase), {right_cg},
                 {left_np->span.end, right_np->span.start});
    return add_node(NodeKind::Intersect, {}, {left_cg, relate}, node.span);
  }

  const ParseTree& tree_;
  const Lexicon& lexicon_;
  ComputationGraph* graph_ = nullptr;
};

}  // namespace

Lexicon Lexicon::defaults() {
  return Lexicon{{"a", "an", "the", "this", "that", "these", "those", "of"}};
}

Lexicon Lexicon::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon file: " + path);
  Lexicon lex;
  std::string word;
  while (in >> word) lex.stopwords.insert(word);
  return lex;
}

std::vector<std::string> Lexicon::filter(const std::vector<std::string>& words) const {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const std::string& w : words) {
    if (!is_stopword(w)) out.push_back(w);
  }
  return out;
}

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Locate: return "Locate";
    case NodeKind::Relate: return "Relate";
    case NodeKind::Intersect: return "Intersect";
  }
  return "?";
}

NodeKind node_kind_from_name(const std::string& name) {
  if (name == "Locate") return NodeKind::Locate;
  if (name == "Relate") return NodeKind::Relate;
  if (name == "Intersect") return NodeKind::Intersect;
  throw Error("unknown node kind: " + name);
}

std::int64_t ComputationGraph::count(NodeKind kind) const {
  std::int64_t n = 0;
  for (const GraphNode& node : nodes) {
    if (node.kind == kind) ++n;
  }
  return n;
}

const ParseTree* find_np(const ParseTree& tree, const TokenSpan& region) {
  return select_np(tree, region, std::nullopt);
}

std::vector<std::string> find_pp(const ParseTree& tree, const ParseTree& left_np,
                                 const ParseTree& right_np, const Lexicon& lexicon) {
  if (left_np.span.end > right_np.span.start) {
    throw OverlappingSpans("left NP [" + std::to_string(left_np.span.start) + "," +
                           std::to_string(left_np.span.end) + ") overlaps right NP [" +
                           std::to_string(right_np.span.start) + "," +
                           std::to_string(right_np.span.end) + ")");
  }
  return lexicon.filter(yield_tokens(tree, {left_np.span.end, right_np.span.start}));
}

ComputationGraph generate_computation_graph(const ParseTree& tree, const Lexicon& lexicon) {
  Compiler compiler(tree, lexicon);
  return compiler.run();
}

std::string export_graph(const ComputationGraph& graph, GraphFormat format) {
  if (format == GraphFormat::Dot) {
    std::ostringstream os;
    os << "digraph computation_graph {\n";
    os << "  rankdir=BT;\n";
    for (const GraphNode& node : graph.nodes) {
      os << "  n" << node.id << " [shape=box, label=\"" << node_kind_name(node.kind);
      if (!node.phrase.empty()) os << ": " << join(node.phrase);
      os << "\"];\n";
    }
    for (const GraphNode& node : graph.nodes) {
      for (std::int32_t input : node.inputs) {
        os << "  n" << input << " -> n" << node.id << ";\n";
      }
    }
    os << "}\n";
    return os.str();
  }

  json doc;
  doc["format"] = "groundnet-graph";
  doc["version"] = 1;
  doc["expression"] = graph.expression;
  doc["root"] = graph.root;
  json nodes = json::array();
  for (const GraphNode& node : graph.nodes) {
    json n;
    n["id"] = node.id;
    n["kind"] = node_kind_name(node.kind);
    n["phrase"] = node.phrase;
    n["inputs"] = node.inputs;
    n["span"] = {node.source_span.start, node.source_span.end};
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

ComputationGraph import_graph_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.value("format", "") != "groundnet-graph" || doc.value("version", 0) != 1) {
    throw Error("not a groundnet-graph v1 document");
  }
  ComputationGraph graph;
  graph.expression = doc.at("expression").get<std::vector<std::string>>();
  graph.root = doc.at("root").get<std::int32_t>();
  for (const json& n : doc.at("nodes")) {
    GraphNode node;
    node.id = n.at("id").get<std::int32_t>();
    node.kind = node_kind_from_name(n.at("kind").get<std::string>());
    node.phrase = n.at("phrase").get<std::vector<std::string>>();
    node.inputs = n.at("inputs").get<std::vector<std::int32_t>>();
    node.source_span = {n.at("span")[0].get<std::int64_t>(), n.at("span")[1].get<std::int64_t>()};
    if (node.id != static_cast<std::int32_t>(graph.nodes.size())) {
      throw Error("graph nodes must be listed in id order");
    }
    graph.nodes.push_back(std::move(node));
  }
  if (graph.root < 0 || graph.root >= static_cast<std::int32_t>(graph.nodes.size())) {
    throw Error("graph root id out of range");
  }
  return graph;
}

}  // namespace groundnet
