#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "codestylo/common.hpp"
#include "codestylo/tokenizer.hpp"

namespace stylo {

// One syntax-tree node. Kind names follow the canonical taxonomy. Operator
// kinds (Add, Gt, ...) and expression contexts are stored as attributes, not
// child nodes, so identifier/constant nodes are structural leaves.
struct Node {
    std::string kind;
    std::string aux;  // identifier text, op name(s), literal text, ...
    std::vector<Node> children;
    int depth = 0;
    std::size_t first_tok = 0;  // token index range, inclusive
    std::size_t last_tok = 0;
    std::size_t start_off = 0;  // byte range into the source
    std::size_t end_off = 0;

    bool leaf() const { return children.empty(); }
};

struct SyntaxTree {
    Node root;
    TokenStream tokens;
    std::string source;
};

namespace detail {

class Parser {
public:
    Parser(TokenStream tokens, std::string source)
        : toks_(std::move(tokens)), src_(std::move(source)) {}

    SyntaxTree run() {
        Node module = make("Module", pos_);
        skip_newlines();
        while (!at_end()) {
            append_statement(module.children);
            skip_newlines();
        }
        close(module);
        if (module.children.empty()) {
            module.first_tok = module.last_tok = 0;
            module.start_off = module.end_off = 0;
        }
        SyntaxTree tree{std::move(module), std::move(toks_), std::move(src_)};
        assign_depths(tree.root, 0);
        return tree;
    }

private:
    // ---- token helpers -------------------------------------------------
    bool at_end() const { return pos_ >= toks_.size(); }
    const Token& cur() const {
        if (at_end()) throw ParseError("unexpected end of input", last_line(), 0);
        return toks_[pos_];
    }
    int last_line() const { return toks_.empty() ? 1 : toks_.back().line; }

    bool at(TokenKind k) const { return !at_end() && toks_[pos_].kind == k; }
    bool at_text(std::string_view t) const { return !at_end() && toks_[pos_].text == t; }
    bool at_kw(std::string_view t) const {
        return at(TokenKind::keyword) && toks_[pos_].text == t;
    }
    bool at_op(std::string_view t) const {
        return !at_end() &&
               (toks_[pos_].kind == TokenKind::op || toks_[pos_].kind == TokenKind::delimiter) &&
               toks_[pos_].text == t;
    }
    const Token& advance() { return toks_[pos_++]; }
    void expect_op(std::string_view t) {
        if (!at_op(t)) fail(std::string("expected '") + std::string(t) + "'");
        ++pos_;
    }
    void expect_kw(std::string_view t) {
        if (!at_kw(t)) fail(std::string("expected '") + std::string(t) + "'");
        ++pos_;
    }
    void expect_newline() {
        if (at(TokenKind::newline)) { ++pos_; return; }
        if (at_end()) return;
        fail("expected end of statement");
    }
    [[noreturn]] void fail(const std::string& msg) const {
        if (at_end()) throw ParseError(msg + " (at end of input)", last_line(), 0);
        throw ParseError(msg + ", got '" + cur().text + "'", cur().line, cur().column);
    }
    void skip_newlines() {
        while (at(TokenKind::newline)) ++pos_;
    }

    // ---- node helpers --------------------------------------------------
    Node make(std::string kind, std::size_t start_tok) const {
        Node n;
        n.kind = std::move(kind);
        n.first_tok = start_tok;
        n.last_tok = start_tok;
        if (start_tok < toks_.size()) {
            n.start_off = toks_[start_tok].offset;
            n.end_off = toks_[start_tok].offset + toks_[start_tok].text.size();
        }
        return n;
    }
    // Seals the span at the last consumed token.
    void close(Node& n) const {
        std::size_t last = pos_ == 0 ? 0 : pos_ - 1;
        if (last >= toks_.size()) last = toks_.empty() ? 0 : toks_.size() - 1;
        n.last_tok = last;
        if (last < toks_.size())
            n.end_off = toks_[last].offset + toks_[last].text.size();
        if (n.first_tok < toks_.size()) n.start_off = toks_[n.first_tok].offset;
    }
    static void assign_depths(Node& n, int d) {
        n.depth = d;
        for (auto& c : n.children) assign_depths(c, d + 1);
    }

    // ---- statements ----------------------------------------------------
    void append_statement(std::vector<Node>& out) {
        if (at(TokenKind::keyword)) {
            const std::string& t = cur().text;
            if (t == "if") { out.push_back(if_stmt()); return; }
            if (t == "while") { out.push_back(while_stmt()); return; }
            if (t == "for") { out.push_back(for_stmt(false)); return; }
            if (t == "try") { out.push_back(try_stmt()); return; }
            if (t == "with") { out.push_back(with_stmt(false)); return; }
            if (t == "def") { out.push_back(funcdef(false, {})); return; }
            if (t == "class") { out.push_back(classdef({})); return; }
            if (t == "async") { out.push_back(async_stmt()); return; }
        }
        if (at_op("@")) { out.push_back(decorated()); return; }
        append_simple_stmts(out);
    }

    Node decorated() {
        std::vector<Node> decorators;
        while (at_op("@")) {
            ++pos_;
            decorators.push_back(namedexpr_test());
            expect_newline();
            skip_newlines();
        }
        if (at_kw("def")) return funcdef(false, std::move(decorators));
        if (at_kw("class")) return classdef(std::move(decorators));
        if (at_kw("async")) {
            ++pos_;
            if (at_kw("def")) return funcdef(true, std::move(decorators));
            fail("expected 'def' after 'async'");
        }
        fail("expected function or class definition after decorator");
    }

    Node async_stmt() {
        std::size_t start = pos_;
        expect_kw("async");
        if (at_kw("def")) {
            Node fn = funcdef(true, {});
            fn.first_tok = start;
            fn.start_off = toks_[start].offset;
            return fn;
        }
        if (at_kw("for")) {
            Node fs = for_stmt(true);
            fs.first_tok = start;
            fs.start_off = toks_[start].offset;
            return fs;
        }
        if (at_kw("with")) {
            Node ws = with_stmt(true);
            ws.first_tok = start;
            ws.start_off = toks_[start].offset;
            return ws;
        }
        fail("expected 'def', 'for' or 'with' after 'async'");
    }

    Node if_stmt() {
        std::size_t start = pos_;
        expect_kw("if");
        Node n = make("If", start);
        n.children.push_back(namedexpr_test());
        expect_op(":");
        append_suite(n.children);
        if (at_kw("elif")) {
            // an elif chain is a nested If in the else branch
            n.children.push_back(elif_chain());
        } else if (at_kw("else")) {
            ++pos_;
            expect_op(":");
            append_suite(n.children);
        }
        close(n);
        return n;
    }

    Node elif_chain() {
        std::size_t start = pos_;
        expect_kw("elif");
        Node n = make("If", start);
        n.children.push_back(namedexpr_test());
        expect_op(":");
        append_suite(n.children);
        if (at_kw("elif")) {
            n.children.push_back(elif_chain());
        } else if (at_kw("else")) {
            ++pos_;
            expect_op(":");
            append_suite(n.children);
        }
        close(n);
        return n;
    }

    Node while_stmt() {
        std::size_t start = pos_;
        expect_kw("while");
        Node n = make("While", start);
        n.children.push_back(namedexpr_test());
        expect_op(":");
        append_suite(n.children);
        if (at_kw("else")) {
            ++pos_;
            expect_op(":");
            append_suite(n.children);
        }
        close(n);
        return n;
    }

    Node for_stmt(bool is_async) {
        std::size_t start = pos_;
        expect_kw("for");
        Node n = make(is_async ? "AsyncFor" : "For", start);
        n.children.push_back(target_list());
        expect_kw("in");
        n.children.push_back(testlist());
        expect_op(":");
        append_suite(n.children);
        if (at_kw("else")) {
            ++pos_;
            expect_op(":");
            append_suite(n.children);
        }
        close(n);
        return n;
    }

    Node try_stmt() {
        std::size_t start = pos_;
        expect_kw("try");
        Node n = make("Try", start);
        expect_op(":");
        append_suite(n.children);
        while (at_kw("except")) {
            std::size_t hstart = pos_;
            ++pos_;
            Node handler = make("ExceptHandler", hstart);
            if (!at_op(":")) {
                handler.children.push_back(test());
                if (at_kw("as")) {
                    ++pos_;
                    if (!at(TokenKind::identifier)) fail("expected name after 'as'");
                    handler.aux = advance().text;
                }
            }
            expect_op(":");
            append_suite(handler.children);
            close(handler);
            n.children.push_back(std::move(handler));
        }
        if (at_kw("else")) {
            ++pos_;
            expect_op(":");
            append_suite(n.children);
        }
        if (at_kw("finally")) {
            ++pos_;
            expect_op(":");
            append_suite(n.children);
        }
        close(n);
        return n;
    }

    Node with_stmt(bool is_async) {
        std::size_t start = pos_;
        expect_kw("with");
        Node n = make(is_async ? "AsyncWith" : "With", start);
        n.children.push_back(with_item());
        while (at_op(",")) {
            ++pos_;
            n.children.push_back(with_item());
        }
        expect_op(":");
        append_suite(n.children);
        close(n);
        return n;
    }

    Node with_item() {
        std::size_t start = pos_;
        Node item = make("withitem", start);
        item.children.push_back(test());
        if (at_kw("as")) {
            ++pos_;
            item.children.push_back(target_atom());
        }
        close(item);
        return item;
    }

    Node funcdef(bool is_async, std::vector<Node> decorators) {
        std::size_t start = pos_;
        expect_kw("def");
        Node n = make(is_async ? "AsyncFunctionDef" : "FunctionDef", start);
        if (!at(TokenKind::identifier)) fail("expected function name");
        n.aux = advance().text;
        expect_op("(");
        n.children.push_back(parameters());
        expect_op(")");
        if (at_op("->")) {
            ++pos_;
            Node returns = test();
            // children order: arguments, body..., decorators..., returns
            expect_op(":");
            append_suite(n.children);
            for (auto& d : decorators) n.children.push_back(std::move(d));
            n.children.push_back(std::move(returns));
        } else {
            expect_op(":");
            append_suite(n.children);
            for (auto& d : decorators) n.children.push_back(std::move(d));
        }
        close(n);
        return n;
    }

    Node parameters(bool allow_annotations = true) {
        // arguments node: posonly, args, vararg, kwonly, kw_defaults, kwarg, defaults
        Node args = make("arguments", pos_);
        std::vector<Node> posonly, plain, kwonly, kw_defaults, defaults;
        Node vararg, kwarg;
        bool have_vararg = false, have_kwarg = false, seen_star = false;
        bool any = false;
        while (!at_op(")") && !at_op(":")) {
            any = true;
            if (at_op("/")) {
                ++pos_;
                posonly = std::move(plain);
                plain.clear();
            } else if (at_op("*")) {
                ++pos_;
                seen_star = true;
                if (!at_op(",") && !at_op(")") && !at_op(":")) {
                    vararg = param_arg(allow_annotations);
                    have_vararg = true;
                }
            } else if (at_op("**")) {
                ++pos_;
                kwarg = param_arg(allow_annotations);
                have_kwarg = true;
            } else {
                Node p = param_arg(allow_annotations);
                if (seen_star) {
                    kwonly.push_back(std::move(p));
                    if (at_op("=")) {
                        ++pos_;
                        kw_defaults.push_back(test());
                    }
                } else {
                    plain.push_back(std::move(p));
                    if (at_op("=")) {
                        ++pos_;
                        defaults.push_back(test());
                    }
                }
            }
            if (at_op(",")) ++pos_;
            else break;
        }
        for (auto& p : posonly) args.children.push_back(std::move(p));
        for (auto& p : plain) args.children.push_back(std::move(p));
        if (have_vararg) args.children.push_back(std::move(vararg));
        for (auto& p : kwonly) args.children.push_back(std::move(p));
        for (auto& d : kw_defaults) args.children.push_back(std::move(d));
        if (have_kwarg) args.children.push_back(std::move(kwarg));
        for (auto& d : defaults) args.children.push_back(std::move(d));
        args.aux = std::to_string(posonly.size() + plain.size() + kwonly.size() +
                                  (have_vararg ? 1 : 0) + (have_kwarg ? 1 : 0));
        if (any) close(args);
        return args;
    }

    Node param_arg(bool allow_annotations) {
        std::size_t start = pos_;
        if (!at(TokenKind::identifier)) fail("expected parameter name");
        Node p = make("arg", start);
        p.aux = advance().text;
        if (allow_annotations && at_op(":")) {
            ++pos_;
            p.children.push_back(test());
        }
        close(p);
        return p;
    }

    Node classdef(std::vector<Node> decorators) {
        std::size_t start = pos_;
        expect_kw("class");
        Node n = make("ClassDef", start);
        if (!at(TokenKind::identifier)) fail("expected class name");
        n.aux = advance().text;
        std::vector<Node> bases, kws;
        if (at_op("(")) {
            ++pos_;
            while (!at_op(")")) {
                if (at(TokenKind::identifier) && pos_ + 1 < toks_.size() &&
                    toks_[pos_ + 1].text == "=" && toks_[pos_ + 1].kind == TokenKind::op) {
                    std::size_t kstart = pos_;
                    Node kw = make("keyword", kstart);
                    kw.aux = advance().text;
                    ++pos_;  // '='
                    kw.children.push_back(test());
                    close(kw);
                    kws.push_back(std::move(kw));
                } else if (at_op("**")) {
                    std::size_t kstart = pos_;
                    ++pos_;
                    Node kw = make("keyword", kstart);
                    kw.children.push_back(test());
                    close(kw);
                    kws.push_back(std::move(kw));
                } else {
                    bases.push_back(test());
                }
                if (at_op(",")) ++pos_;
                else break;
            }
            expect_op(")");
        }
        for (auto& b : bases) n.children.push_back(std::move(b));
        for (auto& k : kws) n.children.push_back(std::move(k));
        expect_op(":");
        append_suite(n.children);
        for (auto& d : decorators) n.children.push_back(std::move(d));
        close(n);
        return n;
    }

    void append_suite(std::vector<Node>& out) {
        if (at(TokenKind::newline)) {
            ++pos_;
            skip_newlines();
            if (!at(TokenKind::indent)) fail("expected an indented block");
            ++pos_;
            skip_newlines();
            while (!at(TokenKind::dedent)) {
                if (at_end()) fail("unexpected end of block");
                append_statement(out);
                skip_newlines();
            }
            ++pos_;  // dedent
        } else {
            // inline suite: simple statements on the header line
            append_simple_stmts(out);
        }
    }

    void append_simple_stmts(std::vector<Node>& out) {
        out.push_back(small_stmt());
        while (at_op(";")) {
            ++pos_;
            if (at(TokenKind::newline) || at_end()) break;
            out.push_back(small_stmt());
        }
        expect_newline();
    }

    Node small_stmt() {
        if (at(TokenKind::keyword)) {
            const std::string& t = cur().text;
            if (t == "pass" || t == "break" || t == "continue") {
                Node n = make(t == "pass" ? "Pass" : t == "break" ? "Break" : "Continue", pos_);
                ++pos_;
                return n;
            }
            if (t == "del") return del_stmt();
            if (t == "return") return return_stmt();
            if (t == "raise") return raise_stmt();
            if (t == "global" || t == "nonlocal") return scope_stmt(t);
            if (t == "import") return import_stmt();
            if (t == "from") return from_import_stmt();
            if (t == "assert") return assert_stmt();
            if (t == "yield") {
                std::size_t start = pos_;
                Node n = make("Expr", start);
                n.children.push_back(yield_expr());
                close(n);
                return n;
            }
        }
        return expr_stmt();
    }

    Node del_stmt() {
        std::size_t start = pos_;
        expect_kw("del");
        Node n = make("Delete", start);
        n.children.push_back(target_or_expr());
        while (at_op(",")) {
            ++pos_;
            if (at(TokenKind::newline) || at_op(";") || at_end()) break;
            n.children.push_back(target_or_expr());
        }
        close(n);
        return n;
    }

    Node return_stmt() {
        std::size_t start = pos_;
        expect_kw("return");
        Node n = make("Return", start);
        if (!at(TokenKind::newline) && !at_op(";") && !at_end())
            n.children.push_back(testlist_star());
        close(n);
        return n;
    }

    Node raise_stmt() {
        std::size_t start = pos_;
        expect_kw("raise");
        Node n = make("Raise", start);
        if (!at(TokenKind::newline) && !at_op(";") && !at_end()) {
            n.children.push_back(test());
            if (at_kw("from")) {
                ++pos_;
                n.children.push_back(test());
            }
        }
        close(n);
        return n;
    }

    Node scope_stmt(const std::string& kw) {
        std::size_t start = pos_;
        ++pos_;
        Node n = make(kw == "global" ? "Global" : "Nonlocal", start);
        std::string names;
        while (at(TokenKind::identifier)) {
            if (!names.empty()) names += ",";
            names += advance().text;
            if (at_op(",")) ++pos_;
            else break;
        }
        n.aux = names;
        close(n);
        return n;
    }

    Node import_stmt() {
        std::size_t start = pos_;
        expect_kw("import");
        Node n = make("Import", start);
        n.children.push_back(import_alias(true));
        while (at_op(",")) {
            ++pos_;
            n.children.push_back(import_alias(true));
        }
        close(n);
        return n;
    }

    Node from_import_stmt() {
        std::size_t start = pos_;
        expect_kw("from");
        Node n = make("ImportFrom", start);
        std::string module;
        while (at_op(".")) { module += "."; ++pos_; }
        while (at(TokenKind::identifier)) {
            module += advance().text;
            if (at_op(".")) { module += "."; ++pos_; }
            else break;
        }
        n.aux = module;
        expect_kw("import");
        if (at_op("*")) {
            std::size_t astart = pos_;
            ++pos_;
            Node a = make("alias", astart);
            a.aux = "*";
            n.children.push_back(std::move(a));
        } else {
            bool parens = at_op("(");
            if (parens) ++pos_;
            n.children.push_back(import_alias(false));
            while (at_op(",")) {
                ++pos_;
                if (parens && at_op(")")) break;
                n.children.push_back(import_alias(false));
            }
            if (parens) expect_op(")");
        }
        close(n);
        return n;
    }

    Node import_alias(bool dotted) {
        std::size_t start = pos_;
        if (!at(TokenKind::identifier)) fail("expected module name");
        Node a = make("alias", start);
        std::string name = advance().text;
        if (dotted) {
            while (at_op(".")) {
                ++pos_;
                if (!at(TokenKind::identifier)) fail("expected name after '.'");
                name += "." + advance().text;
            }
        }
        a.aux = name;
        if (at_kw("as")) {
            ++pos_;
            if (!at(TokenKind::identifier)) fail("expected name after 'as'");
            a.aux += " as " + advance().text;
        }
        close(a);
        return a;
    }

    Node assert_stmt() {
        std::size_t start = pos_;
        expect_kw("assert");
        Node n = make("Assert", start);
        n.children.push_back(test());
        if (at_op(",")) {
            ++pos_;
            n.children.push_back(test());
        }
        close(n);
        return n;
    }

    Node expr_stmt() {
        std::size_t start = pos_;
        Node first = testlist_star();
        static const std::vector<std::string> augops = {
            "+=", "-=", "*=", "/=", "//=", "%=", "@=", "&=", "|=", "^=", ">>=", "<<=", "**=",
        };
        if (!at_end() && cur().kind == TokenKind::op) {
            for (const auto& op : augops) {
                if (cur().text == op) {
                    ++pos_;
                    Node n = make("AugAssign", start);
                    n.aux = aug_op_name(op);
                    n.children.push_back(std::move(first));
                    n.children.push_back(at_kw("yield") ? yield_expr() : testlist_star());
                    close(n);
                    return n;
                }
            }
        }
        if (at_op(":")) {
            ++pos_;
            Node n = make("AnnAssign", start);
            n.children.push_back(std::move(first));
            n.children.push_back(test());
            if (at_op("=")) {
                ++pos_;
                n.children.push_back(at_kw("yield") ? yield_expr() : testlist_star());
            }
            close(n);
            return n;
        }
        if (at_op("=")) {
            Node n = make("Assign", start);
            std::vector<Node> parts;
            parts.push_back(std::move(first));
            while (at_op("=")) {
                ++pos_;
                parts.push_back(at_kw("yield") ? yield_expr() : testlist_star());
            }
            // all but the last are targets
            for (auto& p : parts) n.children.push_back(std::move(p));
            close(n);
            return n;
        }
        Node n = make("Expr", start);
        n.children.push_back(std::move(first));
        close(n);
        return n;
    }

    static std::string aug_op_name(std::string_view op) {
        if (op == "+=") return "Add";
        if (op == "-=") return "Sub";
        if (op == "*=") return "Mult";
        if (op == "/=") return "Div";
        if (op == "//=") return "FloorDiv";
        if (op == "%=") return "Mod";
        if (op == "@=") return "MatMult";
        if (op == "&=") return "BitAnd";
        if (op == "|=") return "BitOr";
        if (op == "^=") return "BitXor";
        if (op == ">>=") return "RShift";
        if (op == "<<=") return "LShift";
        return "Pow";
    }

    // ---- targets -------------------------------------------------------
    Node target_list() {
        std::size_t start = pos_;
        Node first = target_atom();
        if (!at_op(",")) return first;
        Node tup = make("Tuple", start);
        tup.children.push_back(std::move(first));
        while (at_op(",")) {
            ++pos_;
            if (at_kw("in") || at_op(":") || at_op("=") || at(TokenKind::newline)) break;
            tup.children.push_back(target_atom());
        }
        close(tup);
        return tup;
    }

    Node target_atom() {
        // targets are ordinary postfix expressions (possibly starred/nested)
        if (at_op("*")) {
            std::size_t start = pos_;
            ++pos_;
            Node st = make("Starred", start);
            st.children.push_back(atom_expr());
            close(st);
            return st;
        }
        if (at_op("(") || at_op("[")) return atom_expr();
        return atom_expr();
    }

    Node target_or_expr() { return test(); }

    // ---- expressions ---------------------------------------------------
    Node testlist_star() {
        std::size_t start = pos_;
        Node first = star_or_namedexpr();
        if (!at_op(",")) return first;
        Node tup = make("Tuple", start);
        tup.children.push_back(std::move(first));
        while (at_op(",")) {
            ++pos_;
            if (end_of_expr_list()) break;
            tup.children.push_back(star_or_namedexpr());
        }
        close(tup);
        return tup;
    }

    Node testlist() {
        std::size_t start = pos_;
        Node first = star_or_test();
        if (!at_op(",")) return first;
        Node tup = make("Tuple", start);
        tup.children.push_back(std::move(first));
        while (at_op(",")) {
            ++pos_;
            if (end_of_expr_list()) break;
            tup.children.push_back(star_or_test());
        }
        close(tup);
        return tup;
    }

    bool end_of_expr_list() const {
        return at_end() || at(TokenKind::newline) || at_op(")") || at_op("]") ||
               at_op("}") || at_op(":") || at_op(";") || at_op("=") ||
               at_kw("in") || at_kw("if") || at_kw("else") || at_kw("for");
    }

    Node star_or_test() {
        if (at_op("*")) {
            std::size_t start = pos_;
            ++pos_;
            Node st = make("Starred", start);
            st.children.push_back(or_expr_chain());
            close(st);
            return st;
        }
        return test();
    }

    Node star_or_namedexpr() {
        if (at_op("*")) return star_or_test();
        return namedexpr_test();
    }

    Node namedexpr_test() {
        std::size_t start = pos_;
        Node t = test();
        if (at_op(":=")) {
            ++pos_;
            Node n = make("NamedExpr", start);
            n.children.push_back(std::move(t));
            n.children.push_back(test());
            close(n);
            return n;
        }
        return t;
    }

    Node test() {
        if (at_kw("lambda")) return lambdef();
        std::size_t start = pos_;
        Node body = or_test();
        if (at_kw("if")) {
            ++pos_;
            Node n = make("IfExp", start);
            Node cond = or_test();
            expect_kw("else");
            Node orelse = test();
            // children order: test, body, orelse
            n.children.push_back(std::move(cond));
            n.children.push_back(std::move(body));
            n.children.push_back(std::move(orelse));
            close(n);
            return n;
        }
        return body;
    }

    Node lambdef() {
        std::size_t start = pos_;
        expect_kw("lambda");
        Node n = make("Lambda", start);
        n.children.push_back(parameters(false));
        expect_op(":");
        n.children.push_back(test());
        close(n);
        return n;
    }

    Node or_test() {
        std::size_t start = pos_;
        Node first = and_test();
        if (!at_kw("or")) return first;
        Node n = make("BoolOp", start);
        n.aux = "Or";
        n.children.push_back(std::move(first));
        while (at_kw("or")) {
            ++pos_;
            n.children.push_back(and_test());
        }
        close(n);
        return n;
    }

    Node and_test() {
        std::size_t start = pos_;
        Node first = not_test();
        if (!at_kw("and")) return first;
        Node n = make("BoolOp", start);
        n.aux = "And";
        n.children.push_back(std::move(first));
        while (at_kw("and")) {
            ++pos_;
            n.children.push_back(not_test());
        }
        close(n);
        return n;
    }

    Node not_test() {
        if (at_kw("not")) {
            std::size_t start = pos_;
            ++pos_;
            Node n = make("UnaryOp", start);
            n.aux = "Not";
            n.children.push_back(not_test());
            close(n);
            return n;
        }
        return comparison();
    }

    Node comparison() {
        std::size_t start = pos_;
        Node left = or_expr_chain();
        std::string ops;
        std::vector<Node> comparators;
        while (true) {
            std::string op = comp_op();
            if (op.empty()) break;
            if (!ops.empty()) ops += ",";
            ops += op;
            comparators.push_back(or_expr_chain());
        }
        if (comparators.empty()) return left;
        Node n = make("Compare", start);
        n.aux = ops;
        n.children.push_back(std::move(left));
        for (auto& c : comparators) n.children.push_back(std::move(c));
        close(n);
        return n;
    }

    std::string comp_op() {
        if (at_op("<")) { ++pos_; return "Lt"; }
        if (at_op(">")) { ++pos_; return "Gt"; }
        if (at_op("==")) { ++pos_; return "Eq"; }
        if (at_op("!=")) { ++pos_; return "NotEq"; }
        if (at_op("<=")) { ++pos_; return "LtE"; }
        if (at_op(">=")) { ++pos_; return "GtE"; }
        if (at_kw("in")) { ++pos_; return "In"; }
        if (at_kw("is")) {
            ++pos_;
            if (at_kw("not")) { ++pos_; return "IsNot"; }
            return "Is";
        }
        if (at_kw("not") && pos_ + 1 < toks_.size() && toks_[pos_ + 1].kind == TokenKind::keyword &&
            toks_[pos_ + 1].text == "in") {
            pos_ += 2;
            return "NotIn";
        }
        return "";
    }

    Node or_expr_chain() { return binop_level(0); }

    // binary operator precedence levels, loosest first
    Node binop_level(int level) {
        struct Level {
            std::vector<std::pair<std::string, std::string>> ops;  // text -> name
        };
        static const std::vector<Level> levels = {
            {{{"|", "BitOr"}}},
            {{{"^", "BitXor"}}},
            {{{"&", "BitAnd"}}},
            {{{"<<", "LShift"}, {">>", "RShift"}}},
            {{{"+", "Add"}, {"-", "Sub"}}},
            {{{"*", "Mult"}, {"@", "MatMult"}, {"/", "Div"},
              {"//", "FloorDiv"}, {"%", "Mod"}}},
        };
        if (level >= static_cast<int>(levels.size())) return factor();
        std::size_t start = pos_;
        Node left = binop_level(level + 1);
        while (true) {
            std::string name;
            for (const auto& [text, nm] : levels[level].ops) {
                if (at_op(text)) { name = nm; break; }
            }
            if (name.empty()) break;
            ++pos_;
            Node n = make("BinOp", start);
            n.aux = name;
            n.children.push_back(std::move(left));
            n.children.push_back(binop_level(level + 1));
            close(n);
            left = std::move(n);
        }
        return left;
    }

    Node factor() {
        if (at_op("+") || at_op("-") || at_op("~")) {
            std::size_t start = pos_;
            std::string op = advance().text;
            Node n = make("UnaryOp", start);
            n.aux = op == "+" ? "UAdd" : op == "-" ? "USub" : "Invert";
            n.children.push_back(factor());
            close(n);
            return n;
        }
        return power();
    }

    Node power() {
        std::size_t start = pos_;
        Node base = atom_expr();
        if (at_op("**")) {
            ++pos_;
            Node n = make("BinOp", start);
            n.aux = "Pow";
            n.children.push_back(std::move(base));
            n.children.push_back(factor());  // right-assoc, unary allowed on rhs
            close(n);
            return n;
        }
        return base;
    }

    Node atom_expr() {
        if (at_kw("await")) {
            std::size_t start = pos_;
            ++pos_;
            Node n = make("Await", start);
            n.children.push_back(atom_expr());
            close(n);
            return n;
        }
        std::size_t start = pos_;
        Node node = atom();
        while (true) {
            if (at_op("(")) {
                node = call_trailer(std::move(node), start);
            } else if (at_op("[")) {
                node = subscript_trailer(std::move(node), start);
            } else if (at_op(".")) {
                ++pos_;
                if (!at(TokenKind::identifier)) fail("expected attribute name");
                Node attr = make("Attribute", start);
                attr.aux = advance().text;
                attr.children.push_back(std::move(node));
                close(attr);
                node = std::move(attr);
            } else {
                break;
            }
        }
        return node;
    }

    Node call_trailer(Node func, std::size_t start) {
        expect_op("(");
        Node call = make("Call", start);
        std::vector<Node> args, kwargs;
        while (!at_op(")")) {
            if (at_op("**")) {
                std::size_t kstart = pos_;
                ++pos_;
                Node kw = make("keyword", kstart);
                kw.children.push_back(test());
                close(kw);
                kwargs.push_back(std::move(kw));
            } else if (at_op("*")) {
                std::size_t sstart = pos_;
                ++pos_;
                Node st = make("Starred", sstart);
                st.children.push_back(test());
                close(st);
                args.push_back(std::move(st));
            } else if (at(TokenKind::identifier) && pos_ + 1 < toks_.size() &&
                       toks_[pos_ + 1].kind == TokenKind::op && toks_[pos_ + 1].text == "=") {
                std::size_t kstart = pos_;
                Node kw = make("keyword", kstart);
                kw.aux = advance().text;
                ++pos_;  // '='
                kw.children.push_back(test());
                close(kw);
                kwargs.push_back(std::move(kw));
            } else {
                std::size_t astart = pos_;
                Node arg = namedexpr_test();
                if (at_kw("for") || at_kw("async")) {
                    arg = comprehension_tail("GeneratorExp", std::move(arg), astart, {});
                }
                args.push_back(std::move(arg));
            }
            if (at_op(",")) ++pos_;
            else break;
        }
        expect_op(")");
        call.children.push_back(std::move(func));
        for (auto& a : args) call.children.push_back(std::move(a));
        for (auto& k : kwargs) call.children.push_back(std::move(k));
        close(call);
        return call;
    }

    Node subscript_trailer(Node value, std::size_t start) {
        expect_op("[");
        Node sub = make("Subscript", start);
        std::size_t items_start = pos_;
        std::vector<Node> items;
        bool tuple_slice = false;
        while (!at_op("]")) {
            items.push_back(subscript_item());
            if (at_op(",")) {
                ++pos_;
                tuple_slice = true;
            } else {
                break;
            }
        }
        expect_op("]");
        Node slice;
        if (items.empty()) fail("empty subscript");
        if (items.size() == 1 && !tuple_slice) {
            slice = std::move(items.front());
        } else {
            slice = make("Tuple", items_start);
            for (auto& it : items) slice.children.push_back(std::move(it));
            slice.last_tok = pos_ >= 2 ? pos_ - 2 : 0;  // token before ']'
            if (slice.last_tok < toks_.size())
                slice.end_off = toks_[slice.last_tok].offset + toks_[slice.last_tok].text.size();
        }
        sub.children.push_back(std::move(value));
        sub.children.push_back(std::move(slice));
        close(sub);
        return sub;
    }

    Node subscript_item() {
        std::size_t start = pos_;
        Node lower, upper, step;
        bool has_lower = false, has_upper = false, has_step = false;
        if (!at_op(":")) {
            Node first = test();
            if (!at_op(":")) return first;  // plain index
            lower = std::move(first);
            has_lower = true;
        }
        expect_op(":");
        Node n = make("Slice", start);
        if (!at_op(":") && !at_op("]") && !at_op(",")) {
            upper = test();
            has_upper = true;
        }
        if (at_op(":")) {
            ++pos_;
            if (!at_op("]") && !at_op(",")) {
                step = test();
                has_step = true;
            }
        }
        if (has_lower) n.children.push_back(std::move(lower));
        if (has_upper) n.children.push_back(std::move(upper));
        if (has_step) n.children.push_back(std::move(step));
        close(n);
        return n;
    }

    Node yield_expr() {
        std::size_t start = pos_;
        expect_kw("yield");
        if (at_kw("from")) {
            ++pos_;
            Node n = make("YieldFrom", start);
            n.children.push_back(test());
            close(n);
            return n;
        }
        Node n = make("Yield", start);
        if (!at(TokenKind::newline) && !at_op(")") && !at_op("]") && !at_op("}") &&
            !at_op(";") && !at_op(",") && !at_end()) {
            n.children.push_back(testlist_star());
        }
        close(n);
        return n;
    }

    Node atom() {
        if (at_end()) fail("expected expression");
        const Token& t = cur();
        if (t.kind == TokenKind::identifier) {
            Node n = make("Name", pos_);
            n.aux = t.text;
            ++pos_;
            return n;
        }
        if (t.kind == TokenKind::keyword) {
            if (t.text == "None" || t.text == "True" || t.text == "False") {
                Node n = make("Constant", pos_);
                n.aux = t.text;
                ++pos_;
                return n;
            }
            if (t.text == "lambda") return lambdef();
            if (t.text == "yield") return yield_expr();
            if (t.text == "not") return not_test();
            fail("unexpected keyword in expression");
        }
        if (t.kind == TokenKind::literal) return literal_atom();
        if (at_op("...")) {
            Node n = make("Constant", pos_);
            n.aux = "...";
            ++pos_;
            return n;
        }
        if (at_op("(")) return paren_atom();
        if (at_op("[")) return list_atom();
        if (at_op("{")) return brace_atom();
        fail("expected expression");
    }

    static bool is_string_token(const Token& t) {
        for (char c : t.text) {
            if (c == '\'' || c == '"') return true;
            char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
        }
        return false;
    }
    static bool is_fstring_token(const Token& t) {
        for (char c : t.text) {
            if (c == '\'' || c == '"') return false;
            if (c == 'f' || c == 'F') return true;
        }
        return false;
    }

    Node literal_atom() {
        std::size_t start = pos_;
        if (!is_string_token(cur())) {
            Node n = make("Constant", start);
            n.aux = advance().text;
            return n;
        }
        // adjacent string literals concatenate into one node
        std::vector<std::size_t> parts;
        bool any_f = false;
        while (at(TokenKind::literal) && is_string_token(cur())) {
            if (is_fstring_token(cur())) any_f = true;
            parts.push_back(pos_);
            ++pos_;
        }
        if (!any_f) {
            Node n = make("Constant", start);
            n.aux = toks_[start].text;
            close(n);
            return n;
        }
        Node js = make("JoinedStr", start);
        for (std::size_t idx : parts) {
            if (is_fstring_token(toks_[idx])) {
                append_fstring_values(js, idx);
            } else {
                Node c = make("Constant", idx);
                c.aux = toks_[idx].text;
                js.children.push_back(std::move(c));
            }
        }
        close(js);
        return js;
    }

    // Parses the {...} fields of one f-string token into JoinedStr values.
    void append_fstring_values(Node& js, std::size_t tok_idx) {
        const Token& t = toks_[tok_idx];
        std::string_view text = t.text;
        // strip prefix and quotes
        std::size_t q = text.find_first_of("'\"");
        char quote = text[q];
        std::size_t body_start = q + 1, body_end = text.size() - 1;
        if (text.size() >= q + 6 && text[q + 1] == quote && text[q + 2] == quote) {
            body_start = q + 3;
            body_end = text.size() - 3;
        }
        std::string_view body = text.substr(body_start, body_end - body_start);
        std::string literal;
        std::size_t i = 0;
        auto flush_literal = [&]() {
            if (!literal.empty()) {
                Node c = make("Constant", tok_idx);
                c.aux = literal;
                js.children.push_back(std::move(c));
                literal.clear();
            }
        };
        while (i < body.size()) {
            char c = body[i];
            if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') { literal += '{'; i += 2; continue; }
            if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') { literal += '}'; i += 2; continue; }
            if (c == '}') { ++i; continue; }
            if (c != '{') { literal += c; ++i; continue; }
            // replacement field
            flush_literal();
            ++i;
            int depth = 1;
            std::size_t expr_start = i;
            std::size_t colon = std::string::npos, bang = std::string::npos;
            char in_str = 0;
            while (i < body.size() && depth > 0) {
                char ch = body[i];
                if (in_str) {
                    if (ch == '\\') { i += 2; continue; }
                    if (ch == in_str) in_str = 0;
                } else if (ch == '\'' || ch == '"') {
                    in_str = ch;
                } else if (ch == '{' || ch == '[' || ch == '(') {
                    ++depth;
                } else if (ch == '}' || ch == ']' || ch == ')') {
                    --depth;
                    if (depth == 0 && ch == '}') break;
                } else if (depth == 1 && ch == ':' && colon == std::string::npos) {
                    colon = i;
                } else if (depth == 1 && ch == '!' && i + 1 < body.size() && body[i + 1] != '=' &&
                           bang == std::string::npos) {
                    bang = i;
                }
                ++i;
            }
            std::size_t field_end = i;
            std::size_t expr_end = std::min({field_end,
                                             colon == std::string::npos ? field_end : colon,
                                             bang == std::string::npos ? field_end : bang});
            std::string expr_text(body.substr(expr_start, expr_end - expr_start));
            if (i < body.size()) ++i;  // closing '}'
            Node fv = make("FormattedValue", tok_idx);
            Node sub = parse_embedded_expr(expr_text, tok_idx);
            fv.children.push_back(std::move(sub));
            if (colon != std::string::npos) {
                std::string spec(body.substr(colon + 1, field_end - colon - 1));
                Node spec_node = make("JoinedStr", tok_idx);
                if (spec.find('{') == std::string::npos) {
                    if (!spec.empty()) {
                        Node c = make("Constant", tok_idx);
                        c.aux = spec;
                        spec_node.children.push_back(std::move(c));
                    }
                } else {
                    // nested replacement in format spec
                    Node tmp = make("JoinedStr", tok_idx);
                    // reuse the field scanner on a synthetic f-string body
                    append_fstring_body(tmp, spec, tok_idx);
                    spec_node.children = std::move(tmp.children);
                }
                fv.children.push_back(std::move(spec_node));
            }
            js.children.push_back(std::move(fv));
        }
        flush_literal();
    }

    void append_fstring_body(Node& js, const std::string& body, std::size_t tok_idx) {
        std::string wrapped = "f'";
        for (char c : body) {
            if (c == '\'') wrapped += "\\'";
            else wrapped += c;
        }
        wrapped += "'";
        Token fake{TokenKind::literal, wrapped, toks_[tok_idx].line, toks_[tok_idx].column,
                   toks_[tok_idx].offset};
        toks_.push_back(fake);
        append_fstring_values(js, toks_.size() - 1);
        toks_.pop_back();
        retarget(js, tok_idx);
    }

    Node parse_embedded_expr(const std::string& text, std::size_t tok_idx) {
        TokenStream sub = tokenize(text);
        Parser p(std::move(sub), text);
        p.skip_newlines();
        Node expr = p.namedexpr_test();
        retarget(expr, tok_idx);
        return expr;
    }

    void retarget(Node& n, std::size_t tok_idx) {
        n.first_tok = n.last_tok = tok_idx;
        n.start_off = toks_[tok_idx].offset;
        n.end_off = toks_[tok_idx].offset + toks_[tok_idx].text.size();
        for (auto& c : n.children) retarget(c, tok_idx);
    }

    Node paren_atom() {
        std::size_t open = pos_;
        expect_op("(");
        if (at_op(")")) {
            ++pos_;
            Node tup = make("Tuple", open);
            close(tup);
            return tup;
        }
        if (at_kw("yield")) {
            Node y = yield_expr();
            expect_op(")");
            return y;
        }
        std::size_t estart = pos_;
        Node first = star_or_namedexpr();
        if (at_kw("for") || at_kw("async")) {
            Node gen = comprehension_tail("GeneratorExp", std::move(first), open, {});
            expect_op(")");
            close(gen);
            return gen;
        }
        if (at_op(",")) {
            Node tup = make("Tuple", open);
            tup.children.push_back(std::move(first));
            while (at_op(",")) {
                ++pos_;
                if (at_op(")")) break;
                tup.children.push_back(star_or_namedexpr());
            }
            expect_op(")");
            close(tup);
            return tup;
        }
        expect_op(")");
        (void)estart;
        return first;  // parenthesized expression keeps the inner span
    }

    Node list_atom() {
        std::size_t open = pos_;
        expect_op("[");
        if (at_op("]")) {
            ++pos_;
            Node lst = make("List", open);
            close(lst);
            return lst;
        }
        Node first = star_or_namedexpr();
        if (at_kw("for") || at_kw("async")) {
            Node comp = comprehension_tail("ListComp", std::move(first), open, {});
            expect_op("]");
            close(comp);
            return comp;
        }
        Node lst = make("List", open);
        lst.children.push_back(std::move(first));
        while (at_op(",")) {
            ++pos_;
            if (at_op("]")) break;
            lst.children.push_back(star_or_namedexpr());
        }
        expect_op("]");
        close(lst);
        return lst;
    }

    Node brace_atom() {
        std::size_t open = pos_;
        expect_op("{");
        if (at_op("}")) {
            ++pos_;
            Node d = make("Dict", open);
            close(d);
            return d;
        }
        if (at_op("**")) {
            // dict with unpacking
            Node d = make("Dict", open);
            std::vector<Node> keys, values;
            dict_items(keys, values);
            expect_op("}");
            for (auto& k : keys) d.children.push_back(std::move(k));
            for (auto& v : values) d.children.push_back(std::move(v));
            close(d);
            return d;
        }
        Node first = star_or_namedexpr();
        if (at_op(":")) {
            ++pos_;
            Node firstval = test();
            if (at_kw("for") || at_kw("async")) {
                Node comp = make("DictComp", open);
                comp.children.push_back(std::move(first));
                comp.children.push_back(std::move(firstval));
                append_comprehensions(comp);
                expect_op("}");
                close(comp);
                return comp;
            }
            Node d = make("Dict", open);
            std::vector<Node> keys, values;
            keys.push_back(std::move(first));
            values.push_back(std::move(firstval));
            if (at_op(",")) {
                ++pos_;
                dict_items(keys, values);
            }
            expect_op("}");
            for (auto& k : keys) d.children.push_back(std::move(k));
            for (auto& v : values) d.children.push_back(std::move(v));
            close(d);
            return d;
        }
        if (at_kw("for") || at_kw("async")) {
            Node comp = comprehension_tail("SetComp", std::move(first), open, {});
            expect_op("}");
            close(comp);
            return comp;
        }
        Node s = make("Set", open);
        s.children.push_back(std::move(first));
        while (at_op(",")) {
            ++pos_;
            if (at_op("}")) break;
            s.children.push_back(star_or_namedexpr());
        }
        expect_op("}");
        close(s);
        return s;
    }

    void dict_items(std::vector<Node>& keys, std::vector<Node>& values) {
        while (!at_op("}")) {
            if (at_op("**")) {
                ++pos_;
                // unpacking: no key child (matches the null-key convention)
                values.push_back(or_expr_chain());
            } else {
                keys.push_back(test());
                expect_op(":");
                values.push_back(test());
            }
            if (at_op(",")) ++pos_;
            else break;
        }
    }

    Node comprehension_tail(const std::string& kind, Node elt, std::size_t start,
                            std::vector<Node> extra) {
        Node comp = make(kind, start);
        comp.children.push_back(std::move(elt));
        for (auto& e : extra) comp.children.push_back(std::move(e));
        append_comprehensions(comp);
        close(comp);
        return comp;
    }

    void append_comprehensions(Node& comp) {
        while (at_kw("for") || at_kw("async")) {
            std::size_t cstart = pos_;
            bool is_async = false;
            if (at_kw("async")) { is_async = true; ++pos_; }
            expect_kw("for");
            Node gen = make("comprehension", cstart);
            if (is_async) gen.aux = "async";
            gen.children.push_back(target_list());
            expect_kw("in");
            gen.children.push_back(or_test());
            while (at_kw("if")) {
                ++pos_;
                gen.children.push_back(comp_if_expr());
            }
            close(gen);
            comp.children.push_back(std::move(gen));
        }
    }

    Node comp_if_expr() {
        // comprehension condition: or_test (no bare ternary), walrus allowed
        std::size_t start = pos_;
        Node t = or_test();
        if (at_op(":=")) {
            ++pos_;
            Node n = make("NamedExpr", start);
            n.children.push_back(std::move(t));
            n.children.push_back(test());
            close(n);
            return n;
        }
        return t;
    }

    TokenStream toks_;
    std::string src_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline SyntaxTree parse(std::string_view source) {
    TokenStream toks = tokenize(source);
    detail::Parser p(std::move(toks), std::string(source));
    return p.run();
}

// All nodes with at least one child, pre-order.
inline void collect_interior(const Node& n, std::vector<const Node*>& out) {
    if (!n.children.empty()) out.push_back(&n);
    for (const auto& c : n.children) collect_interior(c, out);
}

inline std::vector<const Node*> interior_nodes(const SyntaxTree& tree) {
    std::vector<const Node*> out;
    collect_interior(tree.root, out);
    return out;
}

template <typename Fn>
inline void walk(const Node& n, Fn&& fn) {
    fn(n);
    for (const auto& c : n.children) walk(c, fn);
}

}  // namespace stylo
