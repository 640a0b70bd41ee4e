"""Reader and writer for the CPLEX LP text format.

Only the subset the optimizer emits is supported: one objective, linear
rows, a Bounds section and a Binaries section. Row names are the model tags
with ``:`` replaced by ``.`` (``:`` separates a row name from its body).
"""

from __future__ import annotations

import math
import re

from .errors import LpFormatError
from .optmodel import BINARY, CONTINUOUS, EQ, GE, LE, LinearConstraint, OptModel, Variable

_TERMS_PER_LINE = 8


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _expr(terms, names) -> list[str]:
    parts = []
    for i, a in terms:
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {_num(abs(a))} {names[i]}")
    if not parts:
        parts = ["0 " + names[0]] if names else []
    lines = []
    for k in range(0, len(parts), _TERMS_PER_LINE):
        lines.append(" ".join(parts[k:k + _TERMS_PER_LINE]))
    return lines


def row_name(tag: str) -> str:
    return tag.replace(":", ".")


def write_lp(model: OptModel) -> str:
    names = [v.name for v in model.variables]
    out = [f"\\ stage {model.metadata.get('stage', '?')} model, {len(names)} variables"]
    out.append("Maximize" if model.objective_sense == "max" else "Minimize")
    body = _expr(model.objective, names)
    out.append(" obj: " + (body[0] if body else ""))
    out.extend("   " + line for line in body[1:])
    out.append("Subject To")
    for c in model.constraints:
        body = _expr(c.terms, names)
        body[-1] += f" {c.sense} {_num(c.rhs)}"
        out.append(f" {row_name(c.tag)}: {body[0]}")
        out.extend("   " + line for line in body[1:])
    out.append("Bounds")
    for v in model.variables:
        if v.is_binary:
            out.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
        elif v.lower == -math.inf and v.upper == math.inf:
            out.append(f" {v.name} free")
        else:
            lo = "-inf" if v.lower == -math.inf else _num(v.lower)
            hi = "+inf" if v.upper == math.inf else _num(v.upper)
            out.append(f" {lo} <= {v.name} <= {hi}")
    bins = [v.name for v in model.variables if v.is_binary]
    if bins:
        out.append("Binaries")
        out.extend(f" {b}" for b in bins)
    out.append("End")
    return "\n".join(out) + "\n"


_SECTIONS = {
    "maximize": "max", "maximise": "max", "maximum": "max", "max": "max",
    "minimize": "min", "minimise": "min", "minimum": "min", "min": "min",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}
_TOKEN = re.compile(
    r"\s*(?:(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?inf(?:inity)?)"
    r"|(?P<op><=|>=|=<|=>|<|>|=)|(?P<sign>[+-])|(?P<name>[A-Za-z_!\"#$%&()/,;?@`'{}|~][\w!\"#$%&()/,.;?@`'{}|~\[\]]*))",
    re.IGNORECASE,
)


def _tokens(text: str, lineno: int):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise LpFormatError(f"line {lineno}: cannot parse {text[pos:]!r}")
        pos = m.end()
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
    return out


def _linear(tokens, lineno):
    """Parse ``[sign] [coef] name ...`` into (name, coef) pairs plus leftover tokens."""
    terms = []
    i, sign, coef = 0, 1.0, None
    while i < len(tokens):
        kind, val = tokens[i]
        if kind == "op":
            break
        if kind == "sign":
            sign *= -1.0 if val == "-" else 1.0
        elif kind == "num":
            if coef is not None:
                raise LpFormatError(f"line {lineno}: two coefficients in a row")
            coef = float(val)
        else:
            terms.append((val, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
        i += 1
    if coef is not None:
        if coef != 0:
            raise LpFormatError(f"line {lineno}: dangling constant {coef}")
    return terms, tokens[i:]


def read_lp(text: str) -> OptModel:
    """Parse an LP document back into an :class:`OptModel`."""
    section = None
    sense = None
    obj_chunks: list[tuple[int, str]] = []
    rows: list[tuple[int, str]] = []
    bound_lines: list[tuple[int, str]] = []
    binaries: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section in ("max", "min"):
                sense = section
            if section == "end":
                break
            if section == "gen":
                raise LpFormatError(f"line {lineno}: general integers are not supported")
            continue
        if section in ("max", "min"):
            obj_chunks.append((lineno, line))
        elif section == "st":
            if rows and not re.match(r"^[^:]+:", line) and not re.search(r"(<=|>=|=<|=>|<|>|=)", rows[-1][1]):
                rows[-1] = (rows[-1][0], rows[-1][1] + " " + line)
            else:
                rows.append((lineno, line))
        elif section == "bounds":
            bound_lines.append((lineno, line))
        elif section == "bin":
            binaries.extend(line.split())
        else:
            raise LpFormatError(f"line {lineno}: content outside any section")
    if sense is None:
        raise LpFormatError("missing objective section")

    order: dict[str, int] = {}
    bounds: dict[str, list[float]] = {}

    def vid(name: str) -> int:
        if name not in order:
            order[name] = len(order)
        return order[name]

    for lineno, line in bound_lines:
        toks = _tokens(line, lineno)
        names = [v for k, v in toks if k == "name"]
        if len(names) == 2 and names[1].lower() == "free":
            bounds[names[0]] = [-math.inf, math.inf]
            vid(names[0])
            continue
        if len(names) != 1:
            raise LpFormatError(f"line {lineno}: bound must mention one variable")
        name = names[0]
        vid(name)
        b = bounds.setdefault(name, [0.0, math.inf])
        nums = [(i, float(v)) for i, (k, v) in enumerate(toks) if k == "num"]
        ops = [v for k, v in toks if k == "op"]
        name_pos = next(i for i, (k, v) in enumerate(toks) if k == "name")
        for (i, value), op in zip(nums, ops):
            left = i < name_pos
            op = {"=<": "<=", "=>": ">=", "<": "<=", ">": ">="}.get(op, op)
            if op == "=":
                b[0] = b[1] = value
            elif (op == "<=") == left:
                b[0] = value
            else:
                b[1] = value
        if len(nums) != len(ops):
            raise LpFormatError(f"line {lineno}: malformed bound")

    obj_tokens = []
    for lineno, chunk in obj_chunks:
        if not obj_tokens and ":" in chunk:
            chunk = chunk.split(":", 1)[1]
        obj_tokens.extend(_tokens(chunk, lineno))
    obj_terms, rest = _linear(obj_tokens, obj_chunks[0][0] if obj_chunks else 0)
    if rest:
        raise LpFormatError("objective may not contain a relation")

    constraints = []
    parsed_rows = []
    for lineno, line in rows:
        name = None
        if re.match(r"^[^:<>=]+:", line):
            name, line = line.split(":", 1)
            name = name.strip()
        toks = _tokens(line, lineno)
        terms, rest = _linear(toks, lineno)
        if len(rest) != 2 or rest[0][0] != "op" or rest[1][0] != "num":
            raise LpFormatError(f"line {lineno}: expected '<expr> <sense> <number>'")
        op = {"=<": LE, "<": LE, "=>": GE, ">": GE}.get(rest[0][1], rest[0][1])
        parsed_rows.append((name or f"R{len(parsed_rows)}", terms, op, float(rest[1][1])))

    for name, _ in obj_terms:
        vid(name)
    for _, terms, _, _ in parsed_rows:
        for name, _ in terms:
            vid(name)
    for name in binaries:
        vid(name)

    variables = []
    bin_set = set(binaries)
    for name, i in sorted(order.items(), key=lambda kv: kv[1]):
        lo, hi = bounds.get(name, [0.0, math.inf])
        if name in bin_set and name not in bounds:
            lo, hi = 0.0, 1.0
        variables.append(Variable(i, name, lo, hi, BINARY if name in bin_set else CONTINUOUS))
    for cid, (name, terms, op, rhs) in enumerate(parsed_rows):
        merged: dict[int, float] = {}
        for n, a in terms:
            merged[order[n]] = merged.get(order[n], 0.0) + a
        constraints.append(LinearConstraint(cid, tuple(merged.items()), op, rhs, name.replace(".", ":")))
    objective = {}
    for n, a in obj_terms:
        objective[order[n]] = objective.get(order[n], 0.0) + a
    objective = tuple((i, a) for i, a in objective.items() if a != 0.0)
    return OptModel(tuple(variables), tuple(constraints), sense, objective, {"source": "lp"})
