#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <json.hpp>

#include "codestylo/parser.hpp"
#include "codestylo/tokenizer.hpp"

using namespace stylo;

static void preorder(const Node& n, std::vector<std::pair<std::string, int>>& out) {
    out.emplace_back(n.kind, n.depth);
    for (const auto& c : n.children) preorder(c, out);
}

TEST_CASE("tokenizer basics") {
    auto toks = tokenize("x = f(1) + y  # tail\n");
    std::vector<std::pair<TokenKind, std::string>> expect = {
        {TokenKind::identifier, "x"}, {TokenKind::op, "="},
        {TokenKind::identifier, "f"}, {TokenKind::delimiter, "("},
        {TokenKind::literal, "1"},    {TokenKind::delimiter, ")"},
        {TokenKind::op, "+"},         {TokenKind::identifier, "y"},
        {TokenKind::newline, ""},
    };
    REQUIRE(toks.size() >= expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(toks[i].kind == expect[i].first);
        if (!expect[i].second.empty()) CHECK(toks[i].text == expect[i].second);
    }
}

TEST_CASE("tokenizer keywords vs identifiers") {
    auto toks = tokenize("for x in items: pass\n");
    CHECK(toks[0].kind == TokenKind::keyword);
    CHECK(toks[1].kind == TokenKind::identifier);
    CHECK(toks[2].kind == TokenKind::keyword);
    CHECK(toks[3].kind == TokenKind::identifier);
}

TEST_CASE("tokenizer emits indent and dedent") {
    auto toks = tokenize("if x:\n    y = 1\nz = 2\n");
    int indents = 0, dedents = 0;
    for (const auto& t : toks) {
        if (t.kind == TokenKind::indent) ++indents;
        if (t.kind == TokenKind::dedent) ++dedents;
    }
    CHECK(indents == 1);
    CHECK(dedents == 1);
}

TEST_CASE("tokenize_raw keeps comments, tokenize drops them") {
    auto raw = tokenize_raw("x = 1  # note\n");
    bool has_comment = false;
    for (const auto& t : raw) has_comment |= t.kind == TokenKind::comment;
    CHECK(has_comment);
    for (const auto& t : tokenize("x = 1  # note\n"))
        CHECK(t.kind != TokenKind::comment);
}

TEST_CASE("lexer errors carry position") {
    try {
        tokenize("x = 'unterminated\n");
        FAIL("expected LexError");
    } catch (const LexError& e) {
        CHECK(e.line == 1);
    }
}

TEST_CASE("parse errors carry position") {
    CHECK_THROWS_AS(parse("def f(x y):\n    pass\n"), ParseError);
    CHECK_THROWS_AS(parse("x = = 1\n"), ParseError);
    try {
        parse("if x\n    pass\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
    }
}

TEST_CASE("lambda parameters take no annotations") {
    // a ':' inside a lambda's parameter list belongs to the lambda body
    SyntaxTree t = parse("best = max(counts, key=lambda w: (counts[w], w))\n");
    bool has_lambda = false;
    walk(t.root, [&](const Node& n) { has_lambda |= n.kind == "Lambda"; });
    CHECK(has_lambda);
}

TEST_CASE("tree shape matches the frozen reference cases") {
    std::ifstream in(std::string(DATA_DIR) + "/parser_cases.json");
    REQUIRE(in.good());
    nlohmann::json cases = nlohmann::json::parse(in);
    REQUIRE(cases.size() == 20);
    for (const auto& c : cases) {
        INFO("case ", c.at("name").get<std::string>());
        SyntaxTree tree = parse(c.at("source").get<std::string>());
        std::vector<std::pair<std::string, int>> got;
        preorder(tree.root, got);
        const auto& want = c.at("preorder");
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].first == want[i][0].get<std::string>());
            CHECK(got[i].second == want[i][1].get<int>());
        }
    }
}

TEST_CASE("node spans cover their tokens") {
    SyntaxTree t = parse("def f(a, b):\n    return a + b\n");
    walk(t.root, [&](const Node& n) {
        CHECK(n.first_tok <= n.last_tok);
        CHECK(n.last_tok < t.tokens.size());
        for (const auto& c : n.children) {
            CHECK(c.first_tok >= n.first_tok);
            CHECK(c.last_tok <= n.last_tok);
        }
    });
}
