#include "groundnet/treebank.hpp"

#include <sstream>

#include "groundnet/errors.hpp"

namespace groundnet {

namespace {

const char* kind_name(TreeParseErrorKind kind) {
  switch (kind) {
    case TreeParseErrorKind::UnbalancedParens: return "UnbalancedParens";
    case TreeParseErrorKind::EmptyTree: return "EmptyTree";
    case TreeParseErrorKind::LeafWithChildren: return "LeafWithChildren";
  }
  return "TreeParseError";
}

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(TreeParseErrorKind kind, std::size_t offset, const std::string& what) {
    throw TreeParseError(kind, offset, what);
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool at_atom_char() const {
    if (pos >= text.size()) return false;
    const char c = text[pos];
    return c != '(' && c != ')' && !std::isspace(static_cast<unsigned char>(c));
  }

  std::string read_atom() {
    const std::size_t begin = pos;
    while (at_atom_char()) ++pos;
    return text.substr(begin, pos - begin);
  }

  // tree := '(' label? (token | tree+) ')'
  // An absent label (next char '(') yields an unlabeled wrapper node,
  // matching the outer "( ... )" shell some treebank files carry.
  ParseTree parse_node(std::int64_t& next_token_index) {
    skip_ws();
    if (pos >= text.size() || text[pos] != '(') {
      fail(TreeParseErrorKind::UnbalancedParens, pos, "expected '('");
    }
    const std::size_t open_offset = pos;
    ++pos;
    skip_ws();

    ParseTree node;
    node.label = read_atom();

    bool saw_token = false;
    std::size_t token_offset = 0;
    while (true) {
      skip_ws();
      if (pos >= text.size()) {
        fail(TreeParseErrorKind::UnbalancedParens, pos, "unexpected end of input");
      }
      const char c = text[pos];
      if (c == ')') {
        ++pos;
        break;
      }
      if (c == '(') {
        if (saw_token) {
          fail(TreeParseErrorKind::LeafWithChildren, pos,
               "constituent mixes a bare token with bracketed children");
        }
        node.children.push_back(parse_node(next_token_index));
      } else {
        if (saw_token || !node.children.empty()) {
          fail(TreeParseErrorKind::LeafWithChildren, pos,
               node.children.empty() ? "leaf carries more than one token"
                                     : "constituent mixes a bare token with bracketed children");
        }
        token_offset = pos;
        node.token = read_atom();
        saw_token = true;
      }
    }

    if (saw_token) {
      node.span = {next_token_index, next_token_index + 1};
      ++next_token_index;
      (void)token_offset;
    } else if (!node.children.empty()) {
      node.span = {node.children.front().span.start, node.children.back().span.end};
    } else {
      fail(TreeParseErrorKind::EmptyTree, open_offset, "constituent has no token and no children");
    }
    return node;
  }

  ParseTree parse_root() {
    skip_ws();
    if (pos >= text.size()) {
      fail(TreeParseErrorKind::EmptyTree, pos, "input contains no tree");
    }
    std::int64_t next_token_index = 0;
    ParseTree root = parse_node(next_token_index);
    skip_ws();
    if (pos < text.size()) {
      fail(TreeParseErrorKind::UnbalancedParens, pos, "trailing content after tree");
    }
    return root;
  }
};

void append_ptb(const ParseTree& node, std::string& out) {
  out += '(';
  out += node.label;
  if (node.is_leaf()) {
    out += ' ';
    out += *node.token;
  } else {
    for (const ParseTree& child : node.children) {
      out += ' ';
      append_ptb(child, out);
    }
  }
  out += ')';
}

void collect_tokens(const ParseTree& node, const TokenSpan& span, std::vector<std::string>& out) {
  if (node.span.end <= span.start || node.span.start >= span.end) return;
  if (node.is_leaf()) {
    out.push_back(*node.token);
    return;
  }
  for (const ParseTree& child : node.children) collect_tokens(child, span, out);
}

}  // namespace

TreeParseError::TreeParseError(TreeParseErrorKind kind, std::size_t offset,
                               const std::string& detail)
    : Error(std::string(kind_name(kind)) + " at byte offset " + std::to_string(offset) + ": " +
            detail),
      kind_(kind),
      offset_(offset) {}

InvariantViolation::InvariantViolation(std::size_t record_index, const std::string& detail)
    : Error("InvariantViolation at record " + std::to_string(record_index) + ": " + detail),
      record_index_(record_index) {}

ParseTree read_ptb(const std::string& text) {
  Parser parser(text);
  return parser.parse_root();
}

std::string write_ptb(const ParseTree& tree) {
  std::string out;
  append_ptb(tree, out);
  return out;
}

std::vector<std::string> yield_tokens(const ParseTree& tree, const TokenSpan& span) {
  if (span.start > span.end || span.start < tree.span.start || span.end > tree.span.end) {
    throw SpanOutOfRange("span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                         ") outside tree span [" + std::to_string(tree.span.start) + "," +
                         std::to_string(tree.span.end) + ")");
  }
  std::vector<std::string> out;
  if (span.start == span.end) return out;
  collect_tokens(tree, span, out);
  return out;
}

std::vector<std::string> leaf_tokens(const ParseTree& tree) {
  return yield_tokens(tree, tree.span);
}

std::vector<ParseTree> read_ptb_lines(const std::string& text) {
  std::vector<ParseTree> trees;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) {
        blank = false;
        break;
      }
    }
    if (!blank) trees.push_back(read_ptb(line));
  }
  return trees;
}

}  // namespace groundnet
