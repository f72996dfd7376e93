"""Text formats: the clopen expression grammar, JSON documents and CSV tables.

Clopen expressions::

    expr  := term ('+' term)*          union
    term  := '~' term                  complement
           | '[' prefix ']'            cylinder
           | '{' word (',' word)* '}'  explicit points
           | 'all' | 'none'
           | '(' expr ')'

All writers emit sorted keys and fixed formatting so that equal inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .comparison import SubequivalenceWitness
from .convolution import GroupoidFunction
from .errors import SpecError, ValidationError
from .groupoid import Bisection, FiniteGroupoid
from .measure import PointMeasure
from .unitspace import ClopenSet, UnitSpace

WITNESS_FORMAT = "etale-witness/1"


# -- clopen expressions -------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, space: UnitSpace):
        self.text = text
        self.pos = 0
        self.space = space

    def error(self, msg: str):
        raise SpecError(f"clopen expression {self.text!r}, column {self.pos + 1}: {msg}")

    def peek(self) -> str:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def symbols(self) -> str:
        self.peek()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isalnum():
            self.pos += 1
        return self.text[start : self.pos]

    def expr(self) -> ClopenSet:
        out = self.term()
        while self.peek() == "+":
            self.pos += 1
            out = out | self.term()
        return out

    def term(self) -> ClopenSet:
        ch = self.peek()
        if ch == "~":
            self.pos += 1
            return ~self.term()
        if ch == "(":
            self.pos += 1
            out = self.expr()
            self.take(")")
            return out
        if ch == "[":
            self.pos += 1
            prefix = self.symbols()
            self.take("]")
            if len(prefix) > self.space.depth or any(c not in "0123456789abcdefghijklmnopqrstuvwxyz"[: self.space.alphabet] for c in prefix):
                self.error(f"{prefix!r} is not a prefix over {self.space.alphabet} symbols of length <= {self.space.depth}")
            return self.space.cylinder(prefix)
        if ch == "{":
            self.pos += 1
            words = []
            if self.peek() != "}":
                words.append(self.symbols())
                while self.peek() == ",":
                    self.pos += 1
                    words.append(self.symbols())
            self.take("}")
            try:
                return ClopenSet.from_words(self.space, words)
            except ValidationError as exc:
                self.error(str(exc))
        word = self.symbols()
        if word == "all":
            return self.space.full()
        if word == "none":
            return self.space.empty()
        self.error("expected '[', '{', '~', '(', 'all' or 'none'")


def parse_clopen(text: str, space: UnitSpace) -> ClopenSet:
    p = _Parser(text, space)
    out = p.expr()
    if p.peek():
        p.error("trailing input")
    return out


# -- JSON helpers -------------------------------------------------------------------


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _frac(v) -> str:
    return str(Fraction(v))


def _read_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror}") from None


def clopen_to_json(A: ClopenSet) -> dict:
    return {"alphabet": A.space.alphabet, "depth": A.space.depth, "words": A.words()}


def clopen_from_json(doc: dict, space: UnitSpace) -> ClopenSet:
    if doc.get("alphabet") != space.alphabet or doc.get("depth") != space.depth:
        raise SpecError("clopen set was written for a different unit space")
    return ClopenSet.from_words(space, doc.get("words", []))


def measure_to_json(mu: PointMeasure) -> dict:
    return {"alphabet": mu.space.alphabet, "depth": mu.space.depth, "weights": {w: _frac(v) for w, v in mu.as_mapping().items()}}


def measure_from_json(doc: dict, space: UnitSpace) -> PointMeasure:
    """Read ``{"alphabet", "depth", "weights"}`` or a bare ``{word: rational}`` map."""
    if not isinstance(doc, dict):
        raise SpecError("measure document must be a JSON object")
    if "weights" in doc:
        if doc.get("alphabet") != space.alphabet or doc.get("depth") != space.depth:
            raise SpecError("measure was written for a different unit space")
        doc = doc["weights"]
    try:
        return PointMeasure.from_mapping(space, {w: Fraction(v) for w, v in doc.items()})
    except (AttributeError, ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"malformed measure document: {exc}") from None


def function_to_json(f: GroupoidFunction) -> dict:
    out = {}
    for a, v in sorted(f.values.items()):
        if isinstance(v, complex):
            out[str(a)] = [repr(v.real), repr(v.imag)]
        else:
            out[str(a)] = [_frac(v), "0"]
    return {"arrows": f.groupoid.n_arrows, "values": out}


def function_from_json(doc: dict, G: FiniteGroupoid) -> GroupoidFunction:
    vals = {}
    try:
        for a, (re, im) in doc["values"].items():
            vals[int(a)] = Fraction(re) if Fraction(im) == 0 else complex(float(Fraction(re)), float(Fraction(im)))
    except (KeyError, ValueError, TypeError) as exc:
        raise SpecError(f"malformed function document: {exc}") from None
    return GroupoidFunction(G, vals)


# -- witnesses -------------------------------------------------------------------------


def witness_to_json(G: FiniteGroupoid, A: ClopenSet, B: ClopenSet, W: SubequivalenceWitness) -> dict:
    return {
        "format": WITNESS_FORMAT,
        "groupoid_digest": G.digest(),
        "A": A.words(),
        "B": B.words(),
        "hypothesis_m": W.hypothesis_m,
        "M_D": W.M_D,
        "steps": W.steps,
        "families": [[list(V.arrows) for V in fam] for fam in W.families],
        "provenance": W.provenance,
    }


def witness_from_json(doc: dict, G: FiniteGroupoid) -> tuple[ClopenSet, ClopenSet, SubequivalenceWitness]:
    if not isinstance(doc, dict) or doc.get("format") != WITNESS_FORMAT:
        raise SpecError(f"not a witness document (format must be {WITNESS_FORMAT!r})")
    if doc.get("groupoid_digest") != G.digest():
        raise SpecError("witness was produced for a different groupoid (digest mismatch)")
    try:
        A = ClopenSet.from_words(G.space, doc["A"])
        B = ClopenSet.from_words(G.space, doc["B"])
        families = [[Bisection(G, arrows) for arrows in fam] for fam in doc["families"]]
    except (KeyError, TypeError) as exc:
        raise SpecError(f"malformed witness document: {exc}") from None
    W = SubequivalenceWitness(families, list(doc.get("provenance", [])), doc.get("hypothesis_m"), doc.get("M_D"), doc.get("steps", 0))
    return A, B, W


def load_witness(path, G: FiniteGroupoid):
    return witness_from_json(_read_json(path), G)


# -- CSV -----------------------------------------------------------------------------------


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, bool):
        return int(v)
    return v


def arrow_table(G: FiniteGroupoid) -> str:
    K = set(G.generators)
    words = G.space.words
    rows = (
        (a, words[G.source[a]], words[G.range[a]], _label(G.labels[a]), a in K)
        for a in range(G.n_arrows)
    )
    return csv_text(["id", "source", "range", "label", "in_K"], rows)


def _label(label) -> str:
    if isinstance(label, tuple):
        return "|".join(str(p) for p in label)
    return str(label)


def read_arrow_table(text: str) -> list[dict]:
    """Rows of an arrow table with ``id`` as int and ``in_K`` as bool; words and labels stay text."""
    rows = list(csv.DictReader(io.StringIO(text)))
    for r in rows:
        r["id"] = int(r["id"])
        r["in_K"] = r["in_K"] == "1"
    return rows
