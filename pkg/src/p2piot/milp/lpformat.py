"""CPLEX-style LP text export and a reader for the subset we emit.

Emitted dialect::

    \\ comment lines
    Maximize
     obj: +1.7 U_i0_j2_k1
     -5.9e-08 AQ_a2_b3
    Subject To
     c6_i0_k1: +1 U_i0_j2_k1 +1 U_i0_j3_k1
     <= 1
    Bounds
     IDM_j0 >= 0
    Binary
     U_i0_j2_k1
    End

At most eight terms per line, continuation lines are indented. Numbers use
Python's shortest round-trip ``repr``, so export -> parse -> export is
byte-identical. Continuous variables are listed in ``Bounds`` and binaries
in ``Binary`` so the reader recovers the exact variable order.
"""

from __future__ import annotations

import math
from typing import TextIO

from .model import Constraint, MilpModel, Variable

__all__ = ["export_lp", "dumps_lp", "parse_lp", "LPParseError"]

_TERMS_PER_LINE = 8


class LPParseError(ValueError):
    pass


def _num(x: float) -> str:
    if x == 0:
        return "0"
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _term(coef: float, name: str) -> str:
    s = _num(coef)
    return f"{s if s.startswith('-') else '+' + s} {name}"


def _write_terms(out: list[str], head: str, terms: list[str]) -> None:
    if not terms:
        out.append(f"{head} 0")
        return
    for n in range(0, len(terms), _TERMS_PER_LINE):
        chunk = " ".join(terms[n:n + _TERMS_PER_LINE])
        out.append(f"{head} {chunk}" if n == 0 else f"   {chunk}")


def dumps_lp(m: MilpModel) -> str:
    names = [v.name for v in m.variables]
    out = [f"\\ {m.name}", "Maximize" if m.sense == "maximize" else "Minimize"]
    _write_terms(out, " obj:", [_term(c, names[i]) for i, c in m.objective.items()])
    out.append("Subject To")
    for con in m.constraints:
        _write_terms(out, f" {con.name}:", [_term(c, names[i]) for i, c in con.terms])
        out.append(f"   {con.sense} {_num(con.rhs)}")
    out.append("Bounds")
    for v in m.variables:
        if v.binary:
            continue
        if v.ub == math.inf:
            out.append(f" {v.name} >= {_num(v.lb)}")
        else:
            out.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    out.append("Binary")
    for v in m.variables:
        if v.binary:
            out.append(f" {v.name}")
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(m: MilpModel, sink: TextIO | str) -> None:
    """Write the model to an open text sink or a file path."""
    text = dumps_lp(m)
    if isinstance(sink, str):
        with open(sink, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sink.write(text)


_SECTIONS = {
    "maximize": "obj", "maximise": "obj", "minimize": "obj", "minimise": "obj",
    "subject to": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "binary": "binary", "binaries": "binary", "end": "end",
}


def _parse_terms(tokens: list[str], where: str) -> list[tuple[float, str]]:
    terms = []
    n = 0
    while n < len(tokens):
        tok = tokens[n]
        if tok == "0" and n == len(tokens) - 1:
            break
        try:
            coef = float(tok)
        except ValueError:
            raise LPParseError(f"{where}: expected a coefficient, got {tok!r}") from None
        if n + 1 >= len(tokens):
            raise LPParseError(f"{where}: coefficient {tok!r} without a variable")
        terms.append((coef, tokens[n + 1]))
        n += 2
    return terms


def parse_lp(text: str) -> MilpModel:
    name = "model"
    sense = "maximize"
    section = None
    obj_tokens: list[str] = []
    rows: list[tuple[str, list[str]]] = []
    bounds: list[list[str]] = []
    binaries: list[str] = []

    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            if section is None and name == "model":
                name = line[1:].strip() or name
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "obj":
                sense = "maximize" if key.startswith("max") else "minimize"
            continue
        tokens = line.split()
        if section == "obj":
            if tokens[0].endswith(":"):
                tokens = tokens[1:]
            obj_tokens += tokens
        elif section == "rows":
            if tokens[0].endswith(":"):
                rows.append((tokens[0][:-1], tokens[1:]))
            elif rows:
                rows[-1][1].extend(tokens)
            else:
                raise LPParseError(f"row without a name: {line!r}")
        elif section == "bounds":
            bounds.append(tokens)
        elif section == "binary":
            binaries += tokens
        elif section == "end":
            break
        else:
            raise LPParseError(f"content outside any section: {line!r}")

    variables = [Variable(b, binary=True, lb=0.0, ub=1.0) for b in binaries]
    for tokens in bounds:
        if len(tokens) == 3 and tokens[1] == ">=":
            variables.append(Variable(tokens[0], lb=float(tokens[2])))
        elif len(tokens) == 5 and tokens[1] == "<=" and tokens[3] == "<=":
            variables.append(Variable(tokens[2], lb=float(tokens[0]), ub=float(tokens[4])))
        else:
            raise LPParseError(f"unsupported bound: {' '.join(tokens)!r}")
    m = MilpModel(variables=variables, sense=sense, name=name)

    def idx(var: str) -> int:
        try:
            return m.index(var)
        except KeyError:
            raise LPParseError(f"variable {var!r} is not declared in Bounds or Binary") from None

    m.objective = {idx(v): c for c, v in _parse_terms(obj_tokens, "objective")}
    for row_name, tokens in rows:
        if len(tokens) < 2 or tokens[-2] not in ("<=", ">=", "="):
            raise LPParseError(f"row {row_name}: missing sense and right-hand side")
        terms = [(idx(v), c) for c, v in _parse_terms(tokens[:-2], row_name)]
        m.constraints.append(Constraint(row_name, tuple(terms), tokens[-2], float(tokens[-1])))
    return m
