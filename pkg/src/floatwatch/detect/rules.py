"""Ordered rule table mapping region features to a label.

Predicate grammar (whitespace between tokens is free)::

    predicate := clause ("and" clause)*
    clause    := expr cmp ["-"] NUMBER
    expr      := term (("+" | "-") term)*
    term      := NUMBER "*" NAME | NAME | NUMBER
    cmp       := "<" | "<=" | ">" | ">="
    NUMBER    := [0-9]+ ("." [0-9]+)?
    NAME      := one of FEATURE_NAMES

The first rule whose predicate holds decides the label.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass

from ..errors import ConfigError
from .types import LABELS

FEATURE_NAMES = (
    "mu_r", "mu_g", "mu_b", "mu_gray",
    "sigma_r", "sigma_g", "sigma_b", "sigma_gray",
    "s_r", "s_g", "s_b", "s_gray",
    "area", "box_area", "box_w", "box_h",
    "contrast", "energy", "homogeneity", "correlation",
)
CHANNEL_MEANS = frozenset({"mu_r", "mu_g", "mu_b", "mu_gray"})

_OPS = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}
_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(<=|>=|<|>|\+|-|\*))")


@dataclass(frozen=True)
class Clause:
    coeffs: tuple[tuple[str, float], ...]
    const: float
    op: str
    rhs: float

    def holds(self, features: dict[str, float]) -> bool:
        lhs = self.const
        for name, coef in self.coeffs:
            lhs += coef * features[name]
        return _OPS[self.op](lhs, self.rhs)


@dataclass(frozen=True)
class Rule:
    label: str
    when: str
    weight: float
    clauses: tuple[Clause, ...]

    def matches(self, features: dict[str, float]) -> bool:
        return all(c.holds(features) for c in self.clauses)

    @property
    def shift_invariant(self) -> bool:
        """True when every clause compares only differences of channel means,
        so a uniform brightness shift cannot change the outcome."""
        for c in self.clauses:
            names = {n for n, _ in c.coeffs}
            if not names or not names <= CHANNEL_MEANS:
                return False
            if abs(sum(coef for _, coef in c.coeffs)) > 1e-12:
                return False
        return True


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigError(f"cannot parse predicate {text!r} at column {pos}")
        out.append(m.group(m.lastindex))
        pos = m.end()
    return out


def _is_number(tok: str) -> bool:
    return tok[0].isdigit()


def parse_predicate(text: str) -> tuple[Clause, ...]:
    toks = _tokenize(text)
    clauses: list[Clause] = []
    i = 0

    def need(cond, what):
        if not cond:
            at = toks[i] if i < len(toks) else "end of input"
            raise ConfigError(f"predicate {text!r}: expected {what}, found {at!r}")

    while True:
        coeffs: dict[str, float] = {}
        const = 0.0
        sign = 1.0
        while True:
            need(i < len(toks), "a term")
            tok = toks[i]
            if _is_number(tok):
                if i + 1 < len(toks) and toks[i + 1] == "*":
                    need(i + 2 < len(toks) and toks[i + 2] in FEATURE_NAMES, "a feature name after '*'")
                    name = toks[i + 2]
                    coeffs[name] = coeffs.get(name, 0.0) + sign * float(tok)
                    i += 3
                else:
                    const += sign * float(tok)
                    i += 1
            else:
                need(tok in FEATURE_NAMES, "a feature name")
                coeffs[tok] = coeffs.get(tok, 0.0) + sign
                i += 1
            if i < len(toks) and toks[i] in ("+", "-"):
                sign = 1.0 if toks[i] == "+" else -1.0
                i += 1
                continue
            break
        need(i < len(toks) and toks[i] in _OPS, "a comparison")
        op = toks[i]
        i += 1
        rhs_sign = 1.0
        if i < len(toks) and toks[i] == "-":
            rhs_sign = -1.0
            i += 1
        need(i < len(toks) and _is_number(toks[i]), "a number")
        rhs = rhs_sign * float(toks[i])
        i += 1
        clauses.append(Clause(tuple(sorted(coeffs.items())), const, op, rhs))
        if i == len(toks):
            return tuple(clauses)
        need(toks[i] == "and", "'and'")
        i += 1


def make_rule(label: str, when: str, weight: float = 1.0) -> Rule:
    if label not in LABELS or label == "unknown":
        raise ConfigError(f"rule label must be one of {LABELS[:-1]}, got {label!r}")
    if not 0.0 <= weight <= 1.0:
        raise ConfigError(f"rule weight must lie in [0, 1], got {weight}")
    return Rule(label, when, float(weight), parse_predicate(when))


def rules_from_config(entries: list[dict]) -> tuple[Rule, ...]:
    rules = []
    for n, entry in enumerate(entries):
        extra = set(entry) - {"label", "when", "weight"}
        if extra:
            raise ConfigError(f"detector.rules[{n}]: unknown key {sorted(extra)[0]!r}")
        try:
            rules.append(make_rule(entry["label"], entry["when"], entry.get("weight", 1.0)))
        except KeyError as exc:
            raise ConfigError(f"detector.rules[{n}]: missing key {exc.args[0]!r}") from None
    return tuple(rules)


DEFAULT_RULES = (
    make_rule("vegetation", "mu_g - mu_r > 20 and mu_g - mu_b > 20", 1.0),
    make_rule("vessel", "mu_gray >= 170 and box_area >= 300 and contrast < 2.5", 0.9),
    make_rule("debris", "mu_r - mu_b > 20", 0.8),
    make_rule("debris", "mu_gray <= 60", 0.7),
)


def area_factor(area: float, area_ref: float) -> float:
    return min(1.0, area / area_ref)


def apply_rules(features: dict[str, float], rules=DEFAULT_RULES, area_ref: float = 64.0) -> tuple[str, float]:
    """First matching rule wins.

    Confidence is ``clamp(0.5 + 0.5 * min(1, area / area_ref)) * weight`` for a
    match and ``0.5 * min(1, area / area_ref)`` for the ``unknown`` fallback.
    """
    factor = area_factor(features["area"], area_ref)
    for rule in rules:
        if rule.matches(features):
            return rule.label, min(1.0, max(0.0, 0.5 + 0.5 * factor)) * rule.weight
    return "unknown", 0.5 * factor
