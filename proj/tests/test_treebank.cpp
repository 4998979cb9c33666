#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "groundnet/errors.hpp"
#include "groundnet/rng.hpp"
#include "groundnet/treebank.hpp"
#include "test_util.hpp"

using namespace groundnet;

TEST_CASE("two-leaf tree reads with spans") {
  const ParseTree t = read_ptb("(NP (DT the) (NN plate))");
  CHECK(t.label == "NP");
  CHECK(t.span == TokenSpan{0, 2});
  REQUIRE(t.children.size() == 2);
  CHECK(t.children[0].is_leaf());
  CHECK(*t.children[0].token == "the");
  CHECK(t.children[0].span == TokenSpan{0, 1});
  CHECK(*t.children[1].token == "plate");
  CHECK(t.children[1].span == TokenSpan{1, 2});
}

TEST_CASE("single-leaf tree") {
  const ParseTree t = read_ptb("(NN plate)");
  CHECK(t.is_leaf());
  CHECK(t.span == TokenSpan{0, 1});
  CHECK(*t.token == "plate");
}

TEST_CASE("unbalanced input reports the byte offset") {
  try {
    read_ptb("((NP");
    FAIL("expected TreeParseError");
  } catch (const TreeParseError& e) {
    CHECK(e.kind() == TreeParseErrorKind::UnbalancedParens);
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("trailing garbage is unbalanced") {
  try {
    read_ptb("(NN dog))");
    FAIL("expected TreeParseError");
  } catch (const TreeParseError& e) {
    CHECK(e.kind() == TreeParseErrorKind::UnbalancedParens);
    CHECK(e.offset() == 8);
  }
}

TEST_CASE("empty inputs") {
  for (const char* text : {"", "   ", "()", "(NP)"}) {
    try {
      read_ptb(text);
      FAIL("expected TreeParseError for: ", text);
    } catch (const TreeParseError& e) {
      CHECK(e.kind() == TreeParseErrorKind::EmptyTree);
    }
  }
}

TEST_CASE("leaf with children is rejected") {
  try {
    read_ptb("(NP dog (NN cat))");
    FAIL("expected TreeParseError");
  } catch (const TreeParseError& e) {
    CHECK(e.kind() == TreeParseErrorKind::LeafWithChildren);
    CHECK(e.offset() == 8);
  }
  try {
    read_ptb("(NN a b)");
    FAIL("expected TreeParseError");
  } catch (const TreeParseError& e) {
    CHECK(e.kind() == TreeParseErrorKind::LeafWithChildren);
    CHECK(e.offset() == 6);
  }
}

TEST_CASE("yield_tokens on the sandwich tree") {
  const ParseTree t = read_ptb(testutil::kSandwichTree);
  const std::vector<std::string> expected = {"the",  "half", "of",   "a",    "sandwich", "on",
                                             "the",  "right", "side", "of",  "a",        "plate",
                                             "nearest", "a", "coffee", "mug"};
  CHECK(yield_tokens(t, t.span) == expected);
  CHECK(yield_tokens(t, {0, 0}).empty());
  CHECK(yield_tokens(t, {10, 12}) == std::vector<std::string>{"a", "plate"});

  const ParseTree leaf = read_ptb("(NN mug)");
  CHECK(yield_tokens(leaf, {0, 1}) == std::vector<std::string>{"mug"});
  CHECK_THROWS_AS(yield_tokens(leaf, {0, 2}), SpanOutOfRange);
}

TEST_CASE("round-trip through write_ptb on random trees") {
  Rng rng(2024);
  for (int i = 0; i < 50; ++i) {
    const ParseTree t = testutil::random_template_tree(rng, 4);
    const std::string text = write_ptb(t);
    const ParseTree back = read_ptb(text);
    CHECK(write_ptb(back) == text);
    CHECK(back.span == t.span);
  }
}

TEST_CASE("leaf count equals root span length") {
  Rng rng(99);
  for (int i = 0; i < 50; ++i) {
    const ParseTree t = testutil::random_template_tree(rng, 4);
    CHECK(static_cast<std::int64_t>(leaf_tokens(t).size()) == t.span.length());
  }
}

TEST_CASE("one tree per line") {
  const auto trees = read_ptb_lines("(NN a)\n\n(NP (JJ red) (NN ball))\n");
  REQUIRE(trees.size() == 2);
  CHECK(trees[1].span.length() == 2);
}
