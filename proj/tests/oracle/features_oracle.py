#!/usr/bin/env python3
"""Independent reference implementation of the 140-feature extractor.

Recomputes every feature from CPython's own `tokenize` and `ast` modules and
emits JSON used as golden data by the C++ tests. Usage:

    features_oracle.py snippets_dir out.json

Reads every *.py file in snippets_dir (sorted by name).
"""
import ast
import io
import json
import keyword
import math
import sys
import tokenize
from pathlib import Path

DELIMS = {"(", ")", "[", "]", "{", "}", ",", ":", ";", ".", "->", "..."}
OP_KEYWORDS = {"and", "or", "not", "in", "is"}
SKIP = (ast.expr_context, ast.boolop, ast.operator, ast.unaryop, ast.cmpop)

FEATURE_KEYWORDS = [
    "and", "as", "assert", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "not", "or", "pass", "raise", "return", "try",
    "while", "with", "yield",
]
FEATURE_KINDS = [
    "Module", "FunctionDef", "ClassDef", "Return", "Assign", "AugAssign",
    "AnnAssign", "For", "While", "If", "With", "Try", "ExceptHandler",
    "Expr", "BoolOp", "NamedExpr", "BinOp", "UnaryOp", "Lambda", "IfExp",
    "Dict", "Set", "ListComp", "SetComp", "DictComp", "GeneratorExp",
    "Compare", "Call", "Attribute", "Subscript", "Starred", "List",
    "Tuple", "Slice", "comprehension", "arguments", "arg", "keyword",
    "alias", "withitem", "Assert", "Raise",
]
SINGLETONS = [
    "avgFunctionLength", "avgIdentifierLength", "avgLineLength", "avgParams",
    "branchingFactor", "cyclomaticComplexity", "emptyLinesDensity",
    "maintainabilityIndex", "maxDecisionTokens", "maxDepthASTNode",
    "nestingDepth", "numAssignmentStmtDensity", "numClassesDensity",
    "numFunctionCallsDensity", "numFunctionsDensity", "numInputStmtsDensity",
    "numKeywordsDensity", "numLiteralsDensity", "numStatementsDensity",
    "numVariablesDensity", "numberOfDistinctOperands",
    "numberOfDistinctOperators", "stdDevLineLength", "stdDevNumParams",
    "totalNumberOfOperands", "totalNumberOfOperators", "whiteSpaceRatio",
]
NESTING = (ast.If, ast.For, ast.While, ast.With, ast.Try, ast.FunctionDef,
           ast.ClassDef, ast.AsyncFor, ast.AsyncWith, ast.AsyncFunctionDef)


def children(n):
    return [c for c in ast.iter_child_nodes(n) if not isinstance(c, SKIP)]


def mean(xs):
    return sum(xs) / len(xs) if xs else 0.0


def pop_stddev(xs):
    if not xs:
        return 0.0
    m = mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / len(xs))


def code_tokens(src):
    toks = list(tokenize.generate_tokens(io.StringIO(src).readline))
    keep = []
    for t in toks:
        if t.type in (tokenize.NEWLINE, tokenize.NL, tokenize.INDENT,
                      tokenize.DEDENT, tokenize.COMMENT, tokenize.ENDMARKER):
            continue
        keep.append(t)
    return keep


def halstead_token(toks):
    ops, operands = {}, {}
    for t in toks:
        if (t.type == tokenize.OP and t.string not in DELIMS) or (
                t.type == tokenize.NAME and t.string in OP_KEYWORDS):
            ops[t.string] = ops.get(t.string, 0) + 1
        elif t.type in (tokenize.NUMBER, tokenize.STRING) or (
                t.type == tokenize.NAME and not keyword.iskeyword(t.string)):
            operands[t.string] = operands.get(t.string, 0) + 1
    return (len(ops), len(operands), sum(ops.values()), sum(operands.values()))


def cyclomatic(tree):
    d = 0
    for n in ast.walk(tree):
        if isinstance(n, (ast.If, ast.While, ast.For, ast.AsyncFor,
                          ast.ExceptHandler, ast.IfExp, ast.Assert)):
            d += 1
        elif isinstance(n, ast.comprehension):
            d += len(n.ifs)
        elif isinstance(n, ast.BoolOp):
            d += len(n.values) - 1
    return 1 + d


def ast_volume(tree, src):
    seg = lambda n: ast.get_source_segment(src, n)
    total_ops = total_nds = 0
    names, texts = set(), set()

    def operand(n):
        nonlocal total_nds
        total_nds += 1
        texts.add(seg(n))

    for n in ast.walk(tree):
        if isinstance(n, (ast.BinOp, ast.UnaryOp)):
            total_ops += 1
            names.add(type(n.op).__name__)
            for c in children(n):
                operand(c)
        elif isinstance(n, ast.AugAssign):
            total_ops += 1
            names.add(type(n.op).__name__ + "=")
            for c in children(n):
                operand(c)
        elif isinstance(n, ast.BoolOp):
            total_ops += len(n.values) - 1
            names.add(type(n.op).__name__)
            for c in children(n):
                operand(c)
        elif isinstance(n, ast.Compare):
            total_ops += len(n.ops)
            for op in n.ops:
                names.add(type(op).__name__)
            for c in children(n):
                operand(c)
    vocab = len(names) + len(texts)
    total = total_ops + total_nds
    if total == 0 or vocab == 0:
        return 0.0
    return total * math.log2(vocab)


def collect_targets(n, out):
    if isinstance(n, ast.Name):
        out.add(n.id)
    elif isinstance(n, (ast.Tuple, ast.List, ast.Starred)):
        for c in children(n):
            collect_targets(c, out)


def span_tokens(toks, node):
    start = (node.lineno, node.col_offset)
    end = (node.end_lineno, node.end_col_offset)
    return sum(1 for t in toks if t.start >= start and t.end <= end)


def param_count(a):
    return (len(a.posonlyargs) + len(a.args) + len(a.kwonlyargs) +
            (1 if a.vararg else 0) + (1 if a.kwarg else 0))


def max_nesting(n, depth=0):
    if isinstance(n, NESTING):
        depth += 1
    best = depth
    for c in children(n):
        best = max(best, max_nesting(c, depth))
    return best


def extract(src):
    tree = ast.parse(src)
    toks = code_tokens(src)
    lines = src.split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    nonempty = [ln for ln in lines if ln.strip(" \t\f\r")]
    sloc = len(nonempty)
    empty = len(lines) - sloc
    lengths = [float(len(ln)) for ln in nonempty]
    ws = sum(src.count(c) for c in " \t\f")
    non_ws = sum(1 for c in src if c not in " \t\f\n\r")

    n1, n2, N1, N2 = halstead_token(toks)
    cc = cyclomatic(tree)
    vol = ast_volume(tree, src)
    if vol <= 0.0 or sloc <= 0:
        mi = 100.0
    else:
        mi = 100.0 * (171.0 - 5.2 * math.log(vol) - 0.23 * cc -
                      16.2 * math.log(sloc)) / 171.0
        mi = min(100.0, max(0.0, mi))

    # tree-shape statistics on the filtered tree
    interior_kinds, interior_depths = [], []
    child_counts = []
    max_depth = 0

    def visit(n, depth):
        nonlocal max_depth
        max_depth = max(max_depth, depth)
        kids = children(n)
        if kids:
            interior_kinds.append(type(n).__name__)
            interior_depths.append(depth)
            child_counts.append(len(kids))
        for c in kids:
            visit(c, depth + 1)

    visit(tree, 0)
    n_interior = len(interior_kinds)
    tf, depth_sum, depth_cnt = {}, {}, {}
    for k, d in zip(interior_kinds, interior_depths):
        tf[k] = tf.get(k, 0) + 1
        depth_sum[k] = depth_sum.get(k, 0) + d
        depth_cnt[k] = depth_cnt.get(k, 0) + 1

    # counts
    assigns = calls = functions = classes = inputs = literals = statements = 0
    variables = set()
    max_decision = 0
    func_lines, params = [], []
    kw_counts = {}
    for t in toks:
        if t.type == tokenize.NAME and keyword.iskeyword(t.string):
            kw_counts[t.string] = kw_counts.get(t.string, 0) + 1
    for n in ast.walk(tree):
        if isinstance(n, ast.Assign):
            assigns += 1
            for tgt in n.targets:
                collect_targets(tgt, variables)
        elif isinstance(n, (ast.AugAssign, ast.AnnAssign)):
            assigns += 1
            collect_targets(n.target, variables)
        elif isinstance(n, ast.NamedExpr):
            collect_targets(n.target, variables)
        elif isinstance(n, ast.Call):
            calls += 1
            if isinstance(n.func, ast.Name) and n.func.id == "input":
                inputs += 1
        elif isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef)):
            functions += 1
        elif isinstance(n, ast.ClassDef):
            classes += 1
        elif isinstance(n, ast.Constant):
            literals += 1
        if isinstance(n, ast.stmt):
            statements += 1
        if isinstance(n, (ast.If, ast.While)):
            max_decision = max(max_decision, span_tokens(toks, n.test))
        if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef)):
            body = 0
            for ln in range(n.lineno, n.end_lineno + 1):
                if lines[ln - 1].strip(" \t\f\r"):
                    body += 1
            func_lines.append(float(body))
            params.append(float(param_count(n.args)))

    idents = [float(len(t.string)) for t in toks
              if t.type == tokenize.NAME and not keyword.iskeyword(t.string)]

    d = float(sloc) if sloc > 0 else 0.0
    div = lambda x: x / d if d else 0.0
    values = {
        "avgFunctionLength": mean(func_lines),
        "avgIdentifierLength": mean(idents),
        "avgLineLength": mean(lengths),
        "avgParams": mean(params),
        "branchingFactor": mean([float(c) for c in child_counts]),
        "cyclomaticComplexity": float(cc),
        "emptyLinesDensity": div(float(empty)),
        "maintainabilityIndex": mi,
        "maxDecisionTokens": float(max_decision),
        "maxDepthASTNode": float(max_depth),
        "nestingDepth": float(max_nesting(tree)),
        "numAssignmentStmtDensity": div(float(assigns)),
        "numClassesDensity": div(float(classes)),
        "numFunctionCallsDensity": div(float(calls)),
        "numFunctionsDensity": div(float(functions)),
        "numInputStmtsDensity": div(float(inputs)),
        "numKeywordsDensity": div(float(len(kw_counts))),
        "numLiteralsDensity": div(float(literals)),
        "numStatementsDensity": div(float(statements)),
        "numVariablesDensity": div(float(len(variables))),
        "numberOfDistinctOperands": float(n2),
        "numberOfDistinctOperators": float(n1),
        "stdDevLineLength": pop_stddev(lengths),
        "stdDevNumParams": pop_stddev(params),
        "totalNumberOfOperands": float(N2),
        "totalNumberOfOperators": float(N1),
        "whiteSpaceRatio": ws / non_ws if non_ws else 0.0,
    }
    values["keywordsDensity"] = div(float(sum(kw_counts.values())))
    for kw in FEATURE_KEYWORDS:
        values[kw + "_Density"] = div(float(kw_counts.get(kw, 0)))
    for k in FEATURE_KINDS:
        values["nttf_" + k] = tf.get(k, 0) / n_interior if n_interior else 0.0
    for k in FEATURE_KINDS:
        values["ntad_" + k] = (depth_sum[k] / depth_cnt[k]) if k in depth_sum else 0.0

    order = list(SINGLETONS) + ["keywordsDensity"]
    order += [kw + "_Density" for kw in FEATURE_KEYWORDS]
    order += ["nttf_" + k for k in FEATURE_KINDS]
    order += ["ntad_" + k for k in FEATURE_KINDS]
    assert len(order) == 140 and set(order) == set(values)
    return {"sloc": sloc, "values": [values[name] for name in order],
            "names": order}


def main():
    snippets_dir, out_path = sys.argv[1], sys.argv[2]
    cases = []
    names = None
    for path in sorted(Path(snippets_dir).glob("*.py")):
        src = path.read_text()
        result = extract(src)
        names = result.pop("names")
        cases.append({"name": path.stem, "source": src, **result})
    Path(out_path).write_text(
        json.dumps({"feature_names": names, "cases": cases}, indent=1))
    print(f"{len(cases)} cases -> {out_path}")


if __name__ == "__main__":
    main()
