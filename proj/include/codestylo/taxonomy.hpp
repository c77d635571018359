#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "codestylo/common.hpp"

namespace stylo {

// Canonical node-kind taxonomy: the 130 node classes of the Python 3 abstract
// grammar, alphabetically ordered. The feature column layout depends on this
// order, so it is frozen; data/node_kinds.txt ships the same list and a test
// checks they stay in sync.
inline const std::vector<std::string>& node_kind_taxonomy() {
    static const std::vector<std::string> kinds = {
        "AST", "Add", "And", "AnnAssign", "Assert", "Assign", "AsyncFor",
        "AsyncFunctionDef", "AsyncWith", "Attribute", "AugAssign", "AugLoad",
        "AugStore", "Await", "BinOp", "BitAnd", "BitOr", "BitXor", "BoolOp",
        "Break", "Bytes", "Call", "ClassDef", "Compare", "Constant", "Continue",
        "Del", "Delete", "Dict", "DictComp", "Div", "Ellipsis", "Eq",
        "ExceptHandler", "Expr", "Expression", "ExtSlice", "FloorDiv", "For",
        "FormattedValue", "FunctionDef", "FunctionType", "GeneratorExp",
        "Global", "Gt", "GtE", "If", "IfExp", "Import", "ImportFrom", "In",
        "Index", "Interactive", "Invert", "Is", "IsNot", "JoinedStr", "LShift",
        "Lambda", "List", "ListComp", "Load", "Lt", "LtE", "MatMult", "Match",
        "MatchAs", "MatchClass", "MatchMapping", "MatchOr", "MatchSequence",
        "MatchSingleton", "MatchStar", "MatchValue", "Mod", "Module", "Mult",
        "Name", "NameConstant", "NamedExpr", "Nonlocal", "Not", "NotEq",
        "NotIn", "Num", "Or", "Param", "Pass", "Pow", "RShift", "Raise",
        "Return", "Set", "SetComp", "Slice", "Starred", "Store", "Str", "Sub",
        "Subscript", "Suite", "Try", "Tuple", "TypeIgnore", "UAdd", "USub",
        "UnaryOp", "While", "With", "Yield", "YieldFrom", "alias", "arg",
        "arguments", "boolop", "cmpop", "comprehension", "excepthandler",
        "expr", "expr_context", "keyword", "match_case", "mod", "operator",
        "pattern", "slice", "stmt", "type_ignore", "unaryop", "withitem",
    };
    return kinds;
}

// The 42 node kinds emitted as nttf_/ntad_ feature variants. Selected once by
// document frequency over interior nodes and frozen for column stability.
inline const std::vector<std::string>& feature_node_kinds() {
    static const std::vector<std::string> kinds = {
        "Module", "FunctionDef", "ClassDef", "Return", "Assign", "AugAssign",
        "AnnAssign", "For", "While", "If", "With", "Try", "ExceptHandler",
        "Expr", "BoolOp", "NamedExpr", "BinOp", "UnaryOp", "Lambda", "IfExp",
        "Dict", "Set", "ListComp", "SetComp", "DictComp", "GeneratorExp",
        "Compare", "Call", "Attribute", "Subscript", "Starred", "List",
        "Tuple", "Slice", "comprehension", "arguments", "arg", "keyword",
        "alias", "withitem", "Assert", "Raise",
    };
    return kinds;
}

// All 35 Python 3 keywords.
inline const std::vector<std::string>& python_keywords() {
    static const std::vector<std::string> kws = {
        "False", "None", "True", "and", "as", "assert", "async", "await",
        "break", "class", "continue", "def", "del", "elif", "else", "except",
        "finally", "for", "from", "global", "if", "import", "in", "is",
        "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
        "while", "with", "yield",
    };
    return kws;
}

// The 28 keywords emitted as <kw>_Density feature variants (frozen subset).
inline const std::vector<std::string>& feature_keywords() {
    static const std::vector<std::string> kws = {
        "and", "as", "assert", "break", "class", "continue", "def", "del",
        "elif", "else", "except", "for", "from", "global", "if", "import",
        "in", "is", "lambda", "not", "or", "pass", "raise", "return", "try",
        "while", "with", "yield",
    };
    return kws;
}

inline bool is_python_keyword(std::string_view s) {
    static const std::unordered_set<std::string_view> set(
        python_keywords().begin(), python_keywords().end());
    return set.count(s) > 0;
}

// Hash binding the feature column layout: taxonomy order + variant subsets.
// Embedded in feature matrices and model files to prevent column drift.
inline std::string taxonomy_hash() {
    std::string blob;
    for (const auto& k : node_kind_taxonomy()) { blob += k; blob += '\n'; }
    blob += "--variants--\n";
    for (const auto& k : feature_node_kinds()) { blob += k; blob += '\n'; }
    blob += "--keywords--\n";
    for (const auto& k : feature_keywords()) { blob += k; blob += '\n'; }
    return hex64(fnv1a64(blob));
}

// Parses a taxonomy file (one kind per line) for custom configurations.
inline std::vector<std::string> load_kind_list(const std::string& path) {
    std::vector<std::string> kinds;
    for (auto& line : split_lines(read_file(path))) {
        if (!line.empty()) kinds.push_back(line);
    }
    return kinds;
}

}  // namespace stylo
