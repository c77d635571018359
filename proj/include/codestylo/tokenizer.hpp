#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "codestylo/common.hpp"
#include "codestylo/taxonomy.hpp"

namespace stylo {

enum class TokenKind {
    keyword,
    identifier,
    literal,
    op,
    delimiter,
    newline,
    indent,
    dedent,
    comment,  // only emitted by tokenize_raw; never present post-strip
};

struct Token {
    TokenKind kind;
    std::string text;
    int line;    // 1-based
    int column;  // 0-based
    std::size_t offset;  // byte offset into source
};

using TokenStream = std::vector<Token>;

namespace detail {

inline bool is_ident_start(unsigned char c) {
    return std::isalpha(c) || c == '_' || c >= 0x80;
}
inline bool is_ident_cont(unsigned char c) {
    return std::isalnum(c) || c == '_' || c >= 0x80;
}

inline bool is_string_prefix(std::string_view s) {
    if (s.size() > 2) return false;
    for (char c : s) {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
    }
    return true;
}

// Multi-character operators/delimiters, longest first.
inline const std::vector<std::string>& multi_char_ops() {
    static const std::vector<std::string> ops = {
        "**=", "//=", ">>=", "<<=", "...", "!=", ">=", "<=", "==", "->",
        "+=", "-=", "*=", "/=", "%=", "@=", "&=", "|=", "^=", ":=",
        "**", "//", "<<", ">>",
    };
    return ops;
}

inline bool is_delimiter_text(std::string_view t) {
    return t == "(" || t == ")" || t == "[" || t == "]" || t == "{" ||
           t == "}" || t == "," || t == ":" || t == ";" || t == "." ||
           t == "->" || t == "...";
}

}  // namespace detail

// Python-3 tokenizer: indentation tracking, implicit line joining inside
// brackets, explicit backslash continuation, string prefixes and triple
// quotes. Comments appear only when keep_comments is set.
class Tokenizer {
public:
    explicit Tokenizer(std::string_view source, bool keep_comments = false)
        : src_(source), keep_comments_(keep_comments) {}

    TokenStream run() {
        indents_.push_back(0);
        at_line_start_ = true;
        while (pos_ < src_.size()) {
            step();
        }
        finish();
        return std::move(tokens_);
    }

private:
    void step() {
        if (at_line_start_ && paren_depth_ == 0) {
            handle_line_start();
            // blank/comment-only lines leave us at the start of the next line
            if (pos_ >= src_.size() || at_line_start_) return;
        }
        char c = src_[pos_];
        if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
            ++pos_; ++col_;
            return;
        }
        if (c == '\n') {
            handle_newline();
            return;
        }
        if (c == '\\' && pos_ + 1 < src_.size() &&
            (src_[pos_ + 1] == '\n' ||
             (src_[pos_ + 1] == '\r' && pos_ + 2 < src_.size() && src_[pos_ + 2] == '\n'))) {
            // explicit continuation
            pos_ += (src_[pos_ + 1] == '\r') ? 3 : 2;
            ++line_;
            col_ = 0;
            return;
        }
        if (c == '#') {
            lex_comment();
            return;
        }
        unsigned char uc = static_cast<unsigned char>(c);
        if (detail::is_ident_start(uc)) {
            lex_name_or_string();
            return;
        }
        if (std::isdigit(uc) || (c == '.' && pos_ + 1 < src_.size() &&
                                 std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            lex_number();
            return;
        }
        if (c == '\'' || c == '"') {
            lex_string(pos_);
            return;
        }
        lex_operator();
    }

    void handle_line_start() {
        // Measure indentation; blank and comment-only lines produce no
        // indent/dedent bookkeeping.
        std::size_t p = pos_;
        int width = 0;
        while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
            if (src_[p] == '\t') width = (width / 8 + 1) * 8;
            else if (src_[p] == ' ') ++width;
            ++p;
        }
        if (p >= src_.size() || src_[p] == '\n' ||
            (src_[p] == '\r' && p + 1 < src_.size() && src_[p + 1] == '\n')) {
            // blank line: consume it without tokens
            col_ += static_cast<int>(p - pos_);
            pos_ = p;
            if (pos_ < src_.size()) {
                if (src_[pos_] == '\r') { ++pos_; }
                ++pos_;  // '\n'
                ++line_;
                col_ = 0;
            }
            return;
        }
        if (src_[p] == '#' && !keep_comments_) {
            // comment-only line: skip to end of line
            col_ += static_cast<int>(p - pos_);
            pos_ = p;
            while (pos_ < src_.size() && src_[pos_] != '\n') { ++pos_; ++col_; }
            if (pos_ < src_.size()) { ++pos_; ++line_; col_ = 0; }
            return;
        }
        bool comment_only = (src_[p] == '#');
        col_ += static_cast<int>(p - pos_);
        pos_ = p;
        if (!comment_only) {
            if (width > indents_.back()) {
                indents_.push_back(width);
                emit(TokenKind::indent, "", line_, 0, pos_ - static_cast<std::size_t>(col_));
            } else {
                while (width < indents_.back()) {
                    indents_.pop_back();
                    emit(TokenKind::dedent, "", line_, 0, pos_ - static_cast<std::size_t>(col_));
                }
                if (width != indents_.back())
                    throw LexError("inconsistent dedent", line_, col_);
            }
        }
        at_line_start_ = false;
    }

    void handle_newline() {
        if (paren_depth_ == 0) {
            if (!tokens_.empty() && logical_line_has_content_) {
                emit(TokenKind::newline, "\n", line_, col_, pos_);
                logical_line_has_content_ = false;
            }
            at_line_start_ = true;
        }
        ++pos_;
        ++line_;
        col_ = 0;
    }

    void lex_comment() {
        int start_col = col_;
        std::size_t start = pos_;
        while (pos_ < src_.size() && src_[pos_] != '\n') { ++pos_; ++col_; }
        if (keep_comments_) {
            emit(TokenKind::comment, std::string(src_.substr(start, pos_ - start)),
                 line_, start_col, start, /*counts=*/false);
        }
    }

    void lex_name_or_string() {
        std::size_t start = pos_;
        int start_col = col_;
        while (pos_ < src_.size() && detail::is_ident_cont(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_; ++col_;
        }
        std::string text(src_.substr(start, pos_ - start));
        // string prefix?
        if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') &&
            detail::is_string_prefix(text)) {
            pos_ = start;
            col_ = start_col;
            lex_string(start);
            return;
        }
        TokenKind kind = is_python_keyword(text) ? TokenKind::keyword : TokenKind::identifier;
        emit(kind, std::move(text), line_, start_col, start);
    }

    void lex_number() {
        std::size_t start = pos_;
        int start_col = col_;
        int start_line = line_;
        auto more = [&](int k = 0) { return pos_ + k < src_.size(); };
        auto cur = [&](int k = 0) { return src_[pos_ + k]; };
        if (cur() == '0' && more(1) && (cur(1) == 'x' || cur(1) == 'X' ||
                                        cur(1) == 'o' || cur(1) == 'O' ||
                                        cur(1) == 'b' || cur(1) == 'B')) {
            pos_ += 2;
            while (more() && (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '_')) ++pos_;
        } else {
            while (more() && (std::isdigit(static_cast<unsigned char>(cur())) || cur() == '_')) ++pos_;
            if (more() && cur() == '.') {
                ++pos_;
                while (more() && (std::isdigit(static_cast<unsigned char>(cur())) || cur() == '_')) ++pos_;
            }
            if (more() && (cur() == 'e' || cur() == 'E')) {
                std::size_t save = pos_;
                ++pos_;
                if (more() && (cur() == '+' || cur() == '-')) ++pos_;
                if (more() && std::isdigit(static_cast<unsigned char>(cur()))) {
                    while (more() && std::isdigit(static_cast<unsigned char>(cur()))) ++pos_;
                } else {
                    pos_ = save;  // not an exponent (e.g. attribute 1 .e)
                }
            }
            if (more() && (cur() == 'j' || cur() == 'J')) ++pos_;
        }
        col_ += static_cast<int>(pos_ - start);
        emit(TokenKind::literal, std::string(src_.substr(start, pos_ - start)),
             start_line, start_col, start);
    }

    void lex_string(std::size_t start) {
        int start_col = col_;
        int start_line = line_;
        // consume prefix letters
        bool raw = false;
        while (pos_ < src_.size() && detail::is_ident_start(static_cast<unsigned char>(src_[pos_]))) {
            char l = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_])));
            if (l == 'r') raw = true;
            ++pos_; ++col_;
        }
        if (pos_ >= src_.size() || (src_[pos_] != '\'' && src_[pos_] != '"'))
            throw LexError("malformed string literal", line_, col_);
        char quote = src_[pos_];
        bool triple = (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote);
        if (triple) { pos_ += 3; col_ += 3; }
        else { ++pos_; ++col_; }
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\' && !raw && pos_ + 1 < src_.size()) {
                if (src_[pos_ + 1] == '\n') { pos_ += 2; ++line_; col_ = 0; continue; }
                pos_ += 2; col_ += 2;
                continue;
            }
            if (c == '\\' && raw && pos_ + 1 < src_.size()) {
                // raw strings still cannot end in a lone backslash before the quote
                pos_ += 2; col_ += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) throw LexError("unterminated string literal", start_line, start_col);
                ++pos_; ++line_; col_ = 0;
                continue;
            }
            if (c == quote) {
                if (triple) {
                    if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
                        pos_ += 3; col_ += 3;
                        emit(TokenKind::literal, std::string(src_.substr(start, pos_ - start)),
                             start_line, start_col, start);
                        return;
                    }
                    ++pos_; ++col_;
                    continue;
                }
                ++pos_; ++col_;
                emit(TokenKind::literal, std::string(src_.substr(start, pos_ - start)),
                     start_line, start_col, start);
                return;
            }
            ++pos_; ++col_;
        }
        if (triple && pos_ >= src_.size())
            throw LexError("unterminated triple-quoted string", start_line, start_col);
        throw LexError("unterminated string literal", start_line, start_col);
    }

    void lex_operator() {
        std::size_t start = pos_;
        int start_col = col_;
        std::string_view rest = src_.substr(pos_);
        for (const auto& op : detail::multi_char_ops()) {
            if (rest.substr(0, op.size()) == op) {
                pos_ += op.size();
                col_ += static_cast<int>(op.size());
                emit(detail::is_delimiter_text(op) ? TokenKind::delimiter : TokenKind::op,
                     op, line_, start_col, start);
                return;
            }
        }
        char c = src_[pos_];
        static const std::string singles = "+-*/%@&|^~<>=()[]{},:;.";
        if (singles.find(c) == std::string::npos)
            throw LexError(std::string("unexpected character '") + c + "'", line_, col_);
        if (c == '(' || c == '[' || c == '{') ++paren_depth_;
        if (c == ')' || c == ']' || c == '}') {
            if (paren_depth_ == 0) throw LexError("unmatched closing bracket", line_, col_);
            --paren_depth_;
        }
        ++pos_; ++col_;
        std::string text(1, c);
        TokenKind kind = detail::is_delimiter_text(text) ? TokenKind::delimiter : TokenKind::op;
        emit(kind, std::move(text), line_, start_col, start);
    }

    void finish() {
        if (paren_depth_ > 0) throw LexError("unclosed bracket at end of input", line_, col_);
        if (logical_line_has_content_) {
            emit(TokenKind::newline, "\n", line_, col_, pos_);
            logical_line_has_content_ = false;
        }
        while (indents_.size() > 1) {
            indents_.pop_back();
            emit(TokenKind::dedent, "", line_ + 1, 0, src_.size());
        }
    }

    void emit(TokenKind kind, std::string text, int line, int col, std::size_t offset,
              bool counts = true) {
        if (counts && kind != TokenKind::newline && kind != TokenKind::indent &&
            kind != TokenKind::dedent) {
            logical_line_has_content_ = true;
        }
        tokens_.push_back(Token{kind, std::move(text), line, col, offset});
    }

    std::string_view src_;
    bool keep_comments_;
    TokenStream tokens_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 0;
    int paren_depth_ = 0;
    bool at_line_start_ = true;
    bool logical_line_has_content_ = false;
    std::vector<int> indents_;
};

inline TokenStream tokenize(std::string_view source) {
    return Tokenizer(source, false).run();
}

// Includes comment tokens; used by strip_comments.
inline TokenStream tokenize_raw(std::string_view source) {
    return Tokenizer(source, true).run();
}

}  // namespace stylo
