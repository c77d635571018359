#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "codestylo/common.hpp"
#include "codestylo/parser.hpp"
#include "codestylo/taxonomy.hpp"
#include "codestylo/tokenizer.hpp"

namespace stylo {

// Feature layout configuration: which node kinds and keywords get variant
// columns. Defaults are the frozen subsets from taxonomy.hpp.
struct FeatureConfig {
    std::vector<std::string> node_kinds = feature_node_kinds();
    std::vector<std::string> keywords = feature_keywords();
    std::string hash = taxonomy_hash();

    // Canonical column order: 27 singletons (alphabetical), keywordsDensity,
    // 28 <kw>_Density, 42 nttf_<Kind>, 42 ntad_<Kind>.
    std::vector<std::string> feature_names() const {
        std::vector<std::string> names = {
            "avgFunctionLength", "avgIdentifierLength", "avgLineLength",
            "avgParams", "branchingFactor", "cyclomaticComplexity",
            "emptyLinesDensity", "maintainabilityIndex", "maxDecisionTokens",
            "maxDepthASTNode", "nestingDepth", "numAssignmentStmtDensity",
            "numClassesDensity", "numFunctionCallsDensity",
            "numFunctionsDensity", "numInputStmtsDensity",
            "numKeywordsDensity", "numLiteralsDensity", "numStatementsDensity",
            "numVariablesDensity", "numberOfDistinctOperands",
            "numberOfDistinctOperators", "stdDevLineLength",
            "stdDevNumParams", "totalNumberOfOperands",
            "totalNumberOfOperators", "whiteSpaceRatio",
        };
        names.push_back("keywordsDensity");
        for (const auto& kw : keywords) names.push_back(kw + "_Density");
        for (const auto& k : node_kinds) names.push_back("nttf_" + k);
        for (const auto& k : node_kinds) names.push_back("ntad_" + k);
        return names;
    }

    static const FeatureConfig& canonical() {
        static const FeatureConfig cfg;
        return cfg;
    }
};

inline const std::vector<std::string>& canonical_feature_names() {
    static const std::vector<std::string> names = FeatureConfig::canonical().feature_names();
    return names;
}

struct FeatureVector {
    std::vector<double> values;  // aligned with the config's feature_names()
    int sloc = 0;
    std::string taxonomy_hash;

    double at(const std::string& name) const {
        const auto& names = canonical_feature_names();
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return values[i];
        }
        throw Error("unknown feature: " + name);
    }
};

struct LayoutFeatures {
    double avg_line_length = 0.0;
    double std_dev_line_length = 0.0;
    double empty_lines_density = 0.0;
    double white_space_ratio = 0.0;
    int sloc = 0;
};

struct HalsteadCounts {
    int distinct_operators = 0;  // n1
    int distinct_operands = 0;   // n2
    int total_operators = 0;     // N1
    int total_operands = 0;      // N2

    double volume() const {
        int n = distinct_operators + distinct_operands;
        int total = total_operators + total_operands;
        if (total == 0 || n == 0) return 0.0;
        return total * std::log2(static_cast<double>(n));
    }
};

namespace featdetail {

inline bool line_empty(const std::string& line) {
    return line.find_first_not_of(" \t\f\r") == std::string::npos;
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double pop_stddev(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

inline bool counts_as_code_token(const Token& t) {
    return t.kind != TokenKind::newline && t.kind != TokenKind::indent &&
           t.kind != TokenKind::dedent && t.kind != TokenKind::comment;
}

}  // namespace featdetail

// Layout features are computed on the raw (post-strip) text. Line terminators
// are excluded from character and whitespace counts; whitespace-only lines
// count as empty.
inline LayoutFeatures layout_features(const std::string& source) {
    LayoutFeatures out;
    auto lines = split_lines(source);
    std::vector<double> lengths;
    int empty = 0;
    for (const auto& line : lines) {
        if (featdetail::line_empty(line)) {
            ++empty;
        } else {
            lengths.push_back(static_cast<double>(line.size()));
        }
    }
    out.sloc = static_cast<int>(lengths.size());
    out.avg_line_length = featdetail::mean(lengths);
    out.std_dev_line_length = featdetail::pop_stddev(lengths);
    out.empty_lines_density = out.sloc > 0 ? static_cast<double>(empty) / out.sloc : 0.0;
    long ws = 0, non_ws = 0;
    for (char c : source) {
        if (c == '\n' || c == '\r') continue;
        if (c == ' ' || c == '\t' || c == '\f') ++ws;
        else ++non_ws;
    }
    out.white_space_ratio = non_ws > 0 ? static_cast<double>(ws) / non_ws : 0.0;
    return out;
}

// Token-level Halstead classification: operators are operator tokens plus the
// operator-like keywords (and, or, not, in, is); operands are identifiers and
// literals. Delimiters and remaining keywords are excluded.
inline HalsteadCounts halstead(const TokenStream& tokens) {
    HalsteadCounts h;
    std::set<std::string> ops, operands;
    for (const auto& t : tokens) {
        if (t.kind == TokenKind::op ||
            (t.kind == TokenKind::keyword &&
             (t.text == "and" || t.text == "or" || t.text == "not" ||
              t.text == "in" || t.text == "is"))) {
            ++h.total_operators;
            ops.insert(t.text);
        } else if (t.kind == TokenKind::identifier || t.kind == TokenKind::literal) {
            ++h.total_operands;
            operands.insert(t.text);
        }
    }
    h.distinct_operators = static_cast<int>(ops.size());
    h.distinct_operands = static_cast<int>(operands.size());
    return h;
}

// 1 + decision points: branches, loops, exception handlers, ternaries,
// asserts, comprehension conditions, and boolean-operator fan-in.
inline int cyclomatic_complexity(const SyntaxTree& tree) {
    int decisions = 0;
    walk(tree.root, [&](const Node& n) {
        if (n.kind == "If" || n.kind == "While" || n.kind == "For" ||
            n.kind == "AsyncFor" || n.kind == "ExceptHandler" ||
            n.kind == "IfExp" || n.kind == "Assert") {
            ++decisions;
        } else if (n.kind == "comprehension") {
            // children: target, iter, ifs...
            decisions += static_cast<int>(n.children.size()) - 2;
        } else if (n.kind == "BoolOp") {
            decisions += static_cast<int>(n.children.size()) - 1;
        }
    });
    return 1 + decisions;
}

// Recalibrated maintainability index on [0, 100], comment term omitted.
inline double maintainability_index(double volume, int complexity, int sloc) {
    if (volume <= 0.0 || sloc <= 0) return 100.0;
    double mi = 100.0 *
                (171.0 - 5.2 * std::log(volume) - 0.23 * complexity - 16.2 * std::log(sloc)) /
                171.0;
    return std::clamp(mi, 0.0, 100.0);
}

// Syntax-level Halstead volume feeding the maintainability index: operators
// are the arithmetic/boolean/comparison operator kinds of expression nodes,
// operands their operand subexpressions (distinct by source text).
inline double ast_halstead_volume(const SyntaxTree& tree) {
    int total_ops = 0, total_operands = 0;
    std::set<std::string> op_names, operand_texts;
    auto operand = [&](const Node& c) {
        ++total_operands;
        operand_texts.insert(tree.source.substr(c.start_off, c.end_off - c.start_off));
    };
    walk(tree.root, [&](const Node& n) {
        if (n.kind == "BinOp" || n.kind == "UnaryOp") {
            ++total_ops;
            op_names.insert(n.aux);
            for (const auto& c : n.children) operand(c);
        } else if (n.kind == "AugAssign") {
            ++total_ops;
            op_names.insert(n.aux + "=");
            for (const auto& c : n.children) operand(c);
        } else if (n.kind == "BoolOp") {
            total_ops += static_cast<int>(n.children.size()) - 1;
            op_names.insert(n.aux);
            for (const auto& c : n.children) operand(c);
        } else if (n.kind == "Compare") {
            int nops = 1 + static_cast<int>(std::count(n.aux.begin(), n.aux.end(), ','));
            total_ops += nops;
            std::size_t start = 0;
            while (true) {
                std::size_t comma = n.aux.find(',', start);
                op_names.insert(n.aux.substr(start, comma - start));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            for (const auto& c : n.children) operand(c);
        }
    });
    int n = static_cast<int>(op_names.size() + operand_texts.size());
    int total = total_ops + total_operands;
    if (total == 0 || n == 0) return 0.0;
    return total * std::log2(static_cast<double>(n));
}

// Interior-node term frequency, keyed by kind.
inline std::map<std::string, double> ast_node_tf(const SyntaxTree& tree) {
    std::map<std::string, double> tf;
    auto interior = interior_nodes(tree);
    if (interior.empty()) return tf;
    for (const Node* n : interior) tf[n->kind] += 1.0;
    for (auto& [_, v] : tf) v /= static_cast<double>(interior.size());
    return tf;
}

// Mean depth of interior nodes, per kind.
inline std::map<std::string, double> ast_node_avg_depth(const SyntaxTree& tree) {
    std::map<std::string, double> sum;
    std::map<std::string, int> count;
    for (const Node* n : interior_nodes(tree)) {
        sum[n->kind] += n->depth;
        count[n->kind] += 1;
    }
    std::map<std::string, double> avg;
    for (auto& [k, s] : sum) avg[k] = s / count[k];
    return avg;
}

struct KeywordDensities {
    std::map<std::string, double> per_keyword;  // configured subset only
    double keywords_density = 0.0;              // all keyword tokens / sloc
    double num_keywords_density = 0.0;          // distinct keywords / sloc
};

inline KeywordDensities keyword_densities(const TokenStream& tokens, int sloc,
                                          const FeatureConfig& cfg = FeatureConfig::canonical()) {
    KeywordDensities out;
    for (const auto& kw : cfg.keywords) out.per_keyword[kw] = 0.0;
    if (sloc <= 0) return out;
    std::map<std::string, int> counts;
    int total = 0;
    for (const auto& t : tokens) {
        if (t.kind != TokenKind::keyword) continue;
        ++total;
        counts[t.text] += 1;
    }
    for (const auto& kw : cfg.keywords) {
        auto it = counts.find(kw);
        if (it != counts.end())
            out.per_keyword[kw] = static_cast<double>(it->second) / sloc;
    }
    out.keywords_density = static_cast<double>(total) / sloc;
    out.num_keywords_density = static_cast<double>(counts.size()) / sloc;
    return out;
}

struct StructureCounts {
    double num_assignment_stmt_density = 0.0;
    double num_function_calls_density = 0.0;
    double num_functions_density = 0.0;
    double num_classes_density = 0.0;
    double num_input_stmts_density = 0.0;
    double num_literals_density = 0.0;
    double num_statements_density = 0.0;
    double num_variables_density = 0.0;
};

namespace featdetail {

inline bool is_statement_kind(const std::string& k) {
    static const std::set<std::string> kinds = {
        "FunctionDef", "AsyncFunctionDef", "ClassDef", "Return", "Delete",
        "Assign", "AugAssign", "AnnAssign", "For", "AsyncFor", "While", "If",
        "With", "AsyncWith", "Raise", "Try", "Assert", "Import", "ImportFrom",
        "Global", "Nonlocal", "Expr", "Pass", "Break", "Continue",
    };
    return kinds.count(k) > 0;
}

// Collects simple variable names from an assignment-target expression.
inline void collect_target_names(const Node& n, std::set<std::string>& names) {
    if (n.kind == "Name") {
        names.insert(n.aux);
    } else if (n.kind == "Tuple" || n.kind == "List" || n.kind == "Starred") {
        for (const auto& c : n.children) collect_target_names(c, names);
    }
}

}  // namespace featdetail

inline StructureCounts structure_counts(const SyntaxTree& tree, int sloc) {
    StructureCounts out;
    if (sloc <= 0) return out;
    int assigns = 0, calls = 0, functions = 0, classes = 0, inputs = 0,
        literals = 0, statements = 0;
    std::set<std::string> variables;
    walk(tree.root, [&](const Node& n) {
        if (n.kind == "Assign") {
            ++assigns;
            for (std::size_t i = 0; i + 1 < n.children.size(); ++i)
                featdetail::collect_target_names(n.children[i], variables);
        } else if (n.kind == "AugAssign" || n.kind == "AnnAssign") {
            ++assigns;
            featdetail::collect_target_names(n.children.front(), variables);
        } else if (n.kind == "NamedExpr") {
            featdetail::collect_target_names(n.children.front(), variables);
        } else if (n.kind == "Call") {
            ++calls;
            if (!n.children.empty() && n.children.front().kind == "Name" &&
                n.children.front().aux == "input") {
                ++inputs;
            }
        } else if (n.kind == "FunctionDef" || n.kind == "AsyncFunctionDef") {
            ++functions;
        } else if (n.kind == "ClassDef") {
            ++classes;
        } else if (n.kind == "Constant") {
            ++literals;
        }
        if (featdetail::is_statement_kind(n.kind)) ++statements;
    });
    double d = static_cast<double>(sloc);
    out.num_assignment_stmt_density = assigns / d;
    out.num_function_calls_density = calls / d;
    out.num_functions_density = functions / d;
    out.num_classes_density = classes / d;
    out.num_input_stmts_density = inputs / d;
    out.num_literals_density = literals / d;
    out.num_statements_density = statements / d;
    out.num_variables_density = static_cast<double>(variables.size()) / d;
    return out;
}

struct ShapeFeatures {
    double branching_factor = 0.0;
    double max_depth_ast_node = 0.0;
    double nesting_depth = 0.0;
    double max_decision_tokens = 0.0;
    double avg_function_length = 0.0;
    double avg_identifier_length = 0.0;
    double avg_params = 0.0;
    double std_dev_num_params = 0.0;
};

namespace featdetail {

inline bool is_nesting_kind(const std::string& k) {
    return k == "If" || k == "For" || k == "While" || k == "With" ||
           k == "Try" || k == "FunctionDef" || k == "ClassDef" ||
           k == "AsyncFor" || k == "AsyncWith" || k == "AsyncFunctionDef";
}

inline int span_token_count(const SyntaxTree& tree, const Node& n) {
    int count = 0;
    for (std::size_t i = n.first_tok; i <= n.last_tok && i < tree.tokens.size(); ++i) {
        if (counts_as_code_token(tree.tokens[i])) ++count;
    }
    return count;
}

inline int span_last_line(const SyntaxTree& tree, const Node& n) {
    int last = 0;
    for (std::size_t i = n.first_tok; i <= n.last_tok && i < tree.tokens.size(); ++i) {
        const Token& t = tree.tokens[i];
        if (t.kind == TokenKind::indent || t.kind == TokenKind::dedent) continue;
        last = std::max(last, t.line);
    }
    return last;
}

inline void max_nesting(const Node& n, int current, int& best) {
    if (is_nesting_kind(n.kind)) {
        ++current;
        best = std::max(best, current);
    }
    for (const auto& c : n.children) max_nesting(c, current, best);
}

}  // namespace featdetail

inline ShapeFeatures shape_features(const SyntaxTree& tree) {
    ShapeFeatures out;
    auto interior = interior_nodes(tree);
    if (!interior.empty()) {
        double kids = 0.0;
        for (const Node* n : interior) kids += static_cast<double>(n->children.size());
        out.branching_factor = kids / static_cast<double>(interior.size());
    }
    int max_depth = 0;
    walk(tree.root, [&](const Node& n) { max_depth = std::max(max_depth, n.depth); });
    out.max_depth_ast_node = max_depth;

    int nesting = 0;
    featdetail::max_nesting(tree.root, 0, nesting);
    out.nesting_depth = nesting;

    int max_decision = 0;
    std::vector<double> func_lines, param_counts;
    auto lines = split_lines(tree.source);
    walk(tree.root, [&](const Node& n) {
        if ((n.kind == "If" || n.kind == "While") && !n.children.empty()) {
            max_decision =
                std::max(max_decision, featdetail::span_token_count(tree, n.children.front()));
        }
        if (n.kind == "FunctionDef" || n.kind == "AsyncFunctionDef") {
            int first_line = n.first_tok < tree.tokens.size() ? tree.tokens[n.first_tok].line : 0;
            int last_line = featdetail::span_last_line(tree, n);
            int non_empty = 0;
            for (int ln = first_line; ln <= last_line && ln <= static_cast<int>(lines.size());
                 ++ln) {
                if (!featdetail::line_empty(lines[ln - 1])) ++non_empty;
            }
            func_lines.push_back(non_empty);
            // parameter count was recorded on the arguments node
            if (!n.children.empty() && n.children.front().kind == "arguments")
                param_counts.push_back(std::stod(n.children.front().aux.empty()
                                                     ? "0"
                                                     : n.children.front().aux));
        }
    });
    out.max_decision_tokens = max_decision;
    out.avg_function_length = featdetail::mean(func_lines);
    out.avg_identifier_length = 0.0;
    std::vector<double> ident_lengths;
    for (const auto& t : tree.tokens) {
        if (t.kind == TokenKind::identifier)
            ident_lengths.push_back(static_cast<double>(t.text.size()));
    }
    out.avg_identifier_length = featdetail::mean(ident_lengths);
    out.avg_params = featdetail::mean(param_counts);
    out.std_dev_num_params = featdetail::pop_stddev(param_counts);
    return out;
}

// Token n-gram counts for the baseline feature block. Identifier and literal
// texts are abstracted to their token kind to bound the vocabulary.
inline std::map<std::string, int> ngram_features(const TokenStream& tokens, int n) {
    if (n != 2 && n != 3)
        throw Error("n-gram features support n in {2, 3}; n=" + std::to_string(n) +
                    " is unsupported");
    std::vector<std::string> texts;
    for (const auto& t : tokens) {
        if (!featdetail::counts_as_code_token(t)) continue;
        if (t.kind == TokenKind::identifier) texts.push_back("<id>");
        else if (t.kind == TokenKind::literal) texts.push_back("<lit>");
        else texts.push_back(t.text);
    }
    std::map<std::string, int> grams;
    if (static_cast<int>(texts.size()) < n) return grams;
    for (std::size_t i = 0; i + n <= texts.size(); ++i) {
        std::string key = texts[i];
        for (int j = 1; j < n; ++j) key += "\x1f" + texts[i + j];
        grams[key] += 1;
    }
    return grams;
}

// Full 140-feature extraction from post-strip source.
inline FeatureVector extract(const std::string& source,
                             const FeatureConfig& cfg = FeatureConfig::canonical()) {
    SyntaxTree tree = parse(source);
    LayoutFeatures layout = layout_features(source);
    HalsteadCounts hal = halstead(tree.tokens);
    int cc = cyclomatic_complexity(tree);
    double mi = maintainability_index(ast_halstead_volume(tree), cc, layout.sloc);
    auto tf = ast_node_tf(tree);
    auto avg_depth = ast_node_avg_depth(tree);
    auto kw = keyword_densities(tree.tokens, layout.sloc, cfg);
    auto counts = structure_counts(tree, layout.sloc);
    auto shape = shape_features(tree);

    FeatureVector fv;
    fv.sloc = layout.sloc;
    fv.taxonomy_hash = cfg.hash;
    fv.values = {
        shape.avg_function_length,
        shape.avg_identifier_length,
        layout.avg_line_length,
        shape.avg_params,
        shape.branching_factor,
        static_cast<double>(cc),
        layout.empty_lines_density,
        mi,
        shape.max_decision_tokens,
        shape.max_depth_ast_node,
        shape.nesting_depth,
        counts.num_assignment_stmt_density,
        counts.num_classes_density,
        counts.num_function_calls_density,
        counts.num_functions_density,
        counts.num_input_stmts_density,
        kw.num_keywords_density,
        counts.num_literals_density,
        counts.num_statements_density,
        counts.num_variables_density,
        static_cast<double>(hal.distinct_operands),
        static_cast<double>(hal.distinct_operators),
        layout.std_dev_line_length,
        shape.std_dev_num_params,
        static_cast<double>(hal.total_operands),
        static_cast<double>(hal.total_operators),
        layout.white_space_ratio,
    };
    fv.values.push_back(kw.keywords_density);
    for (const auto& k : cfg.keywords) fv.values.push_back(kw.per_keyword.at(k));
    for (const auto& k : cfg.node_kinds) {
        auto it = tf.find(k);
        fv.values.push_back(it == tf.end() ? 0.0 : it->second);
    }
    for (const auto& k : cfg.node_kinds) {
        auto it = avg_depth.find(k);
        fv.values.push_back(it == avg_depth.end() ? 0.0 : it->second);
    }
    return fv;
}

}  // namespace stylo
