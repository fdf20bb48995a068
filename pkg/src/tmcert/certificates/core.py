"""Certificate record, verdict rule and uncertainty propagation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Union

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass(frozen=True)
class Input:
    value: float
    provenance: str = "user"
    uncertainty: float = 0.0

    def to_json(self) -> dict:
        return {"value": _num(self.value), "provenance": self.provenance,
                "uncertainty": _num(self.uncertainty)}


@dataclass
class Certificate:
    """Signed margin of one existence criterion.

    ``margin`` is left side minus right side of the criterion, so a negative
    margin means the hypothesis holds.  ``uncertainty`` is the propagated
    error budget the margin has to clear.
    """

    id: str
    inputs: Dict[str, Input]
    margin: float
    verdict: str
    uncertainty: float = 0.0
    safety_report: Dict[str, dict] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    extras: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "inputs": {k: v.to_json() for k, v in self.inputs.items()},
            "margin": _num(self.margin),
            "uncertainty": _num(self.uncertainty),
            "verdict": self.verdict,
            "safety_report": _jsonable(self.safety_report),
            "notes": list(self.notes),
            "extras": _jsonable(self.extras),
        }


def _num(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    try:
        return _num(obj)
    except (TypeError, ValueError):
        return str(obj)


def verdict_for(margin: float, uncertainty: float = 0.0) -> str:
    """``pass`` iff ``margin < -u``, ``fail`` iff ``margin > u``, else inconclusive."""
    u = abs(uncertainty)
    if margin < -u:
        return PASS
    if margin > u:
        return FAIL
    return INCONCLUSIVE


InputLike = Union[Input, float, int]


def as_inputs(values: Mapping[str, InputLike], default_provenance: str = "user") -> Dict[str, Input]:
    out = {}
    for k, v in values.items():
        out[k] = v if isinstance(v, Input) else Input(float(v), default_provenance)
    return out


def propagate(fn: Callable[..., float], inputs: Dict[str, Input]):
    """Three-point sensitivity of ``fn`` to each uncertain input.

    Returns the total (linear sum of worst one-sided changes) and a
    per-input report with a Lipschitz estimate.
    """
    base_vals = {k: v.value for k, v in inputs.items()}
    base = fn(**base_vals)
    total = 0.0
    report = {}
    for k, inp in inputs.items():
        if inp.uncertainty <= 0:
            continue
        deltas = []
        for s in (-1.0, 1.0):
            vals = dict(base_vals)
            vals[k] = inp.value + s * inp.uncertainty
            try:
                deltas.append(fn(**vals) - base)
            except ValueError:
                deltas.append(math.inf)
        worst = max(abs(d) for d in deltas)
        report[k] = {
            "tau": inp.uncertainty,
            "delta_minus": deltas[0],
            "delta_plus": deltas[1],
            "lipschitz": worst / inp.uncertainty,
        }
        total += worst
    return base, total, report


def evaluate(
    cert_id: str,
    fn: Callable[..., float],
    inputs: Mapping[str, InputLike],
    notes: Optional[List[str]] = None,
    extra_uncertainty: float = 0.0,
    extras: Optional[dict] = None,
) -> Certificate:
    """Evaluate ``fn`` on the inputs, propagate their uncertainties, issue a verdict."""
    inp = as_inputs(inputs)
    margin, unc, report = propagate(fn, inp)
    unc += abs(extra_uncertainty)
    if extra_uncertainty:
        report["numerical"] = {"tau": abs(extra_uncertainty)}
    return Certificate(cert_id, inp, float(margin), verdict_for(margin, unc), float(unc), report,
                       list(notes or []), dict(extras or {}))
