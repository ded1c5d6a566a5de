"""Zero-order fuzzy inference engine.

Membership functions are piecewise-linear (triangles and trapezoids),
rule activation uses the min t-norm with max aggregation over shared
consequents, and defuzzification is the weighted average of constant
consequents.  Rule bases are immutable after construction and can be
evaluated concurrently from any number of threads; definitions load
from YAML files (see ``load_rule_base`` for the schema).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import yaml


class RuleBaseError(ValueError):
    """Structural problem in a rule-base definition."""


@dataclass(frozen=True)
class MembershipFunction:
    """Piecewise-linear membership function.

    ``points`` holds (a, b, c) for a triangle peaking at b, or
    (a, b, c, d) for a trapezoid with plateau [b, c].  Breakpoints are
    in the physical units of the owning variable.
    """

    label: str
    points: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if len(pts) not in (3, 4):
            raise RuleBaseError(
                f"membership '{self.label}': expected 3 or 4 breakpoints, got {len(pts)}"
            )
        if any(q < p for p, q in zip(pts, pts[1:])):
            raise RuleBaseError(
                f"membership '{self.label}': breakpoints must be non-decreasing: {pts}"
            )
        object.__setattr__(self, "points", pts)

    @property
    def _abcd(self) -> tuple[float, float, float, float]:
        if len(self.points) == 3:
            a, b, c = self.points
            return a, b, b, c
        return self.points  # type: ignore[return-value]

    @property
    def center(self) -> float:
        """Nominal center (peak midpoint), where the degree is 1."""
        _, b, c, _ = self._abcd
        return 0.5 * (b + c)

    def degree(self, x: float) -> float:
        a, b, c, d = self._abcd
        if x < a or x > d:
            return 0.0
        if x < b:
            return (x - a) / (b - a)
        if x <= c:
            return 1.0
        if d == c:
            return 1.0
        return (d - x) / (d - c)


@dataclass(frozen=True)
class FuzzyVariable:
    """A linguistic variable: a universe interval plus ordered membership
    functions whose centers are strictly increasing.  Inputs outside the
    universe are clamped to its boundary before fuzzification."""

    name: str
    universe: tuple[float, float]
    functions: tuple[MembershipFunction, ...]

    def __post_init__(self):
        lo, hi = (float(self.universe[0]), float(self.universe[1]))
        if not lo < hi:
            raise RuleBaseError(f"variable '{self.name}': universe must satisfy lo < hi")
        object.__setattr__(self, "universe", (lo, hi))
        funcs = tuple(self.functions)
        if not funcs:
            raise RuleBaseError(f"variable '{self.name}': needs at least one membership function")
        object.__setattr__(self, "functions", funcs)
        labels = [f.label for f in funcs]
        if len(set(labels)) != len(labels):
            raise RuleBaseError(f"variable '{self.name}': duplicate labels {labels}")
        centers = [f.center for f in funcs]
        if any(c2 <= c1 for c1, c2 in zip(centers, centers[1:])):
            raise RuleBaseError(
                f"variable '{self.name}': function centers must be strictly increasing: {centers}"
            )
        # Full coverage: at least one rule antecedent must fire anywhere
        # in the universe, so the membership sum may not vanish.
        n = 257
        for k in range(n):
            x = min(max(lo + (hi - lo) * k / (n - 1), lo), hi)
            if sum(f.degree(x) for f in funcs) <= 1e-12:
                raise RuleBaseError(
                    f"variable '{self.name}': no membership coverage at x = {x:g}"
                )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.functions)

    def center_of(self, label: str) -> float:
        for f in self.functions:
            if f.label == label:
                return f.center
        raise KeyError(label)

    def clamp(self, x: float) -> float:
        lo, hi = self.universe
        return lo if x < lo else hi if x > hi else x

    def fuzzify(self, x: float) -> dict[str, float]:
        xc = self.clamp(x)
        return {f.label: f.degree(xc) for f in self.functions}


def fuzzify(x: float, var: FuzzyVariable) -> dict[str, float]:
    """Degrees of membership of a crisp value, one per label."""
    return var.fuzzify(x)


@dataclass(frozen=True)
class CrispOutput:
    """Defuzzified value plus a flag telling whether any rule fired.
    ``fired`` False means the weighted average was degenerate and 0 was
    returned so a controller always has an actuation to emit."""

    value: float
    fired: bool

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class FuzzyRuleBase:
    """Rule table over one or two input variables with constant
    (zero-order) consequents.

    Every combination of antecedent labels must appear exactly once and
    every consequent label referenced by a rule must have a constant.
    """

    name: str
    inputs: tuple[FuzzyVariable, ...]
    rules: dict[tuple[str, ...], str]
    consequents: dict[str, float]

    def __post_init__(self):
        if len(self.inputs) not in (1, 2):
            raise RuleBaseError(f"rule base '{self.name}': expected 1 or 2 inputs")
        expected = set(itertools.product(*(v.labels for v in self.inputs)))
        got = set(self.rules)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise RuleBaseError(
                f"rule base '{self.name}': antecedent table mismatch"
                + (f"; missing {missing}" if missing else "")
                + (f"; unknown {extra}" if extra else "")
            )
        unknown = {c for c in self.rules.values() if c not in self.consequents}
        if unknown:
            raise RuleBaseError(
                f"rule base '{self.name}': rules reference undefined consequents {sorted(unknown)}"
            )

    def evaluate(self, *values: float) -> CrispOutput:
        return defuzzify(infer(self, values), self.consequents)


def infer(rulebase: FuzzyRuleBase, inputs: Sequence[float]) -> dict[str, float]:
    """Activation per consequent label: min over antecedents, max over
    rules sharing a consequent."""
    if len(inputs) != len(rulebase.inputs):
        raise RuleBaseError(
            f"rule base '{rulebase.name}': expected {len(rulebase.inputs)} inputs, "
            f"got {len(inputs)}"
        )
    degrees = [var.fuzzify(x) for var, x in zip(rulebase.inputs, inputs)]
    activations = dict.fromkeys(rulebase.consequents, 0.0)
    for antecedent, consequent in rulebase.rules.items():
        w = min(degrees[i][label] for i, label in enumerate(antecedent))
        if w > activations[consequent]:
            activations[consequent] = w
    return activations


def defuzzify(activations: Mapping[str, float], constants: Mapping[str, float]) -> CrispOutput:
    """Weighted average of constant consequents, sum(w*c)/sum(w)."""
    total = 0.0
    weighted = 0.0
    for label, w in activations.items():
        if w > 0.0:
            total += w
            weighted += w * constants[label]
    if total <= 0.0:
        return CrispOutput(0.0, False)
    return CrispOutput(weighted / total, True)


# ---------------------------------------------------------------------------
# Rule-base files

def _parse_functions(varname: str, raw) -> tuple[MembershipFunction, ...]:
    if not isinstance(raw, list) or not raw:
        raise RuleBaseError(f"variable '{varname}': 'functions' must be a non-empty list")
    out = []
    for entry in raw:
        if not isinstance(entry, dict) or "label" not in entry or "points" not in entry:
            raise RuleBaseError(
                f"variable '{varname}': each function needs 'label' and 'points'"
            )
        out.append(MembershipFunction(str(entry["label"]), tuple(entry["points"])))
    return tuple(out)


def _parse_rules(doc_rules, inputs: tuple[FuzzyVariable, ...]) -> dict[tuple[str, ...], str]:
    """Accepts either a flat mapping (1 input) or a nested mapping keyed
    by the first input's labels (2 inputs)."""
    if not isinstance(doc_rules, dict):
        raise RuleBaseError("'rules' must be a mapping")
    rules: dict[tuple[str, ...], str] = {}
    if len(inputs) == 1:
        for a, consequent in doc_rules.items():
            rules[(str(a),)] = str(consequent)
    else:
        for a, row in doc_rules.items():
            if not isinstance(row, dict):
                raise RuleBaseError(f"rules['{a}'] must map second-input labels to consequents")
            for b, consequent in row.items():
                rules[(str(a), str(b))] = str(consequent)
    return rules


def load_rule_base(source) -> FuzzyRuleBase:
    """Build a rule base from a YAML file path, YAML text, or an
    already-parsed mapping.

    Schema::

        name: yaw_moment
        inputs:
          - name: beta_err_rad
            universe: [-0.15, 0.15]
            functions:
              - {label: "-B", points: [-0.15, -0.15, -0.09, -0.035]}
              - {label: "-S", points: [-0.09, -0.035, 0.0]}
              ...
        rules:            # nested by first input label (or flat for 1 input)
          "-B": {"-B": P2, "-S": P3, Z: P4, S: P4, B: P4}
          ...
        consequents: {N4: -4500.0, ..., P4: 4500.0}
    """
    if isinstance(source, Mapping):
        doc = source
    else:
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise RuleBaseError("rule-base document must be a mapping")
    for key in ("inputs", "rules", "consequents"):
        if key not in doc:
            raise RuleBaseError(f"rule-base document missing '{key}'")
    name = str(doc.get("name", "unnamed"))
    raw_inputs = doc["inputs"]
    if not isinstance(raw_inputs, list) or not 1 <= len(raw_inputs) <= 2:
        raise RuleBaseError(f"rule base '{name}': 'inputs' must list 1 or 2 variables")
    inputs = []
    for raw in raw_inputs:
        if not isinstance(raw, dict) or "name" not in raw or "universe" not in raw:
            raise RuleBaseError(f"rule base '{name}': each input needs 'name' and 'universe'")
        vname = str(raw["name"])
        uni = raw["universe"]
        if not isinstance(uni, (list, tuple)) or len(uni) != 2:
            raise RuleBaseError(f"variable '{vname}': universe must be [lo, hi]")
        inputs.append(FuzzyVariable(vname, (uni[0], uni[1]), _parse_functions(vname, raw.get("functions"))))
    consequents = doc["consequents"]
    if not isinstance(consequents, dict):
        raise RuleBaseError(f"rule base '{name}': 'consequents' must be a mapping")
    return FuzzyRuleBase(
        name=name,
        inputs=tuple(inputs),
        rules=_parse_rules(doc["rules"], tuple(inputs)),
        consequents={str(k): float(v) for k, v in consequents.items()},
    )


@lru_cache(maxsize=None)
def builtin_rule_base(name: str) -> FuzzyRuleBase:
    """Load one of the rule bases shipped with the package
    (``yaw_moment``, ``torque_cut``, ``abs_modulator``, ``autopilot_steer``)."""
    ref = resources.files("espsim") / "rulebases" / f"{name}.yaml"
    try:
        text = ref.read_text()
    except FileNotFoundError:
        raise RuleBaseError(f"no builtin rule base named '{name}'") from None
    return load_rule_base(yaml.safe_load(text))
