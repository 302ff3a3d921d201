"""Closed-form deterioration models and a multivariate polynomial fitter.

A deterioration model maps (age A in years, wall thickness loss W in percent)
to remaining useful life Y in years through a polynomial of total degree at
most three.  Four built-in models ship with the package, one per material
class; they are implemented exactly as published, which
means the CI model goes negative for ages above roughly 12 years and the DI
and AC models grow with age.  The clamped output exists for consumers that
need a physically sensible floor.

fit_polynomial reproduces the construction procedure on data: least squares
over the monomial basis (degrees 1-3), optionally with greedy term selection
that keeps adding the best term while R² improves by at least 0.005.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NonpositiveBaseline, OutOfDomain, Underdetermined, UnsupportedMaterial

GREEDY_R2_GAIN = 0.005
MAX_DEGREE = 3


@dataclass(frozen=True)
class DeteriorationModel:
    """Polynomial RUL model: terms are (coefficient, age_power, wtl_power)."""

    material: str          # CI | DI | AC | Steel | Custom
    terms: tuple
    r2_fit: float
    degenerate: bool = False  # rank-deficient fit, minimum-norm coefficients

    def __post_init__(self):
        if not self.terms:
            raise ValueError("term list must be non-empty")
        for coef, a_pow, w_pow in self.terms:
            if a_pow < 0 or w_pow < 0 or a_pow + w_pow > MAX_DEGREE:
                raise ValueError(f"bad monomial exponents ({a_pow}, {w_pow})")

    def to_dict(self) -> dict:
        return {
            "material": self.material,
            "terms": [list(t) for t in self.terms],
            "r2_fit": self.r2_fit,
            "degenerate": self.degenerate,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps({"format": "pipelife-deterioration-v1", **self.to_dict()}, indent=indent)

    @classmethod
    def from_dict(cls, payload: dict) -> "DeteriorationModel":
        return cls(
            material=payload["material"],
            terms=tuple((float(c), int(a), int(w)) for c, a, w in payload["terms"]),
            r2_fit=float(payload["r2_fit"]),
            degenerate=bool(payload.get("degenerate", False)),
        )

    def formula(self) -> str:
        parts = []
        for coef, a_pow, w_pow in self.terms:
            mono = ""
            if a_pow:
                mono += "A" + (f"^{a_pow}" if a_pow > 1 else "")
            if w_pow:
                mono += ("*" if mono else "") + "W" + (f"^{w_pow}" if w_pow > 1 else "")
            parts.append(f"{coef:+g}" + (f"*{mono}" if mono else ""))
        return "Y = " + " ".join(parts)


_BUILTIN = {
    "CI": ((-0.342, 2, 0), (0.0548, 0, 1), (48.163, 0, 0)),
    "DI": ((0.004, 3, 0), (-0.025, 0, 2), (0.11, 1, 1), (51.0, 0, 0)),
    "AC": ((0.0038, 2, 0), (-0.49, 0, 1), (195.92, 0, 0)),
    "Steel": ((0.005, 3, 0), (-0.012, 0, 2), (-0.989, 1, 1), (-0.012, 0, 0)),
}
_BUILTIN_R2 = {"CI": 0.78, "DI": 0.74, "AC": 0.80, "Steel": 0.73}

BUILTIN_MATERIALS = tuple(_BUILTIN)


def builtin(material: str) -> DeteriorationModel:
    """The published deterioration model for CI, DI, AC or Steel pipes."""
    key = material.strip()
    lookup = {m.lower(): m for m in _BUILTIN}
    if key.lower() not in lookup:
        raise UnsupportedMaterial(
            f"no built-in model for {material!r}; choose one of {', '.join(_BUILTIN)}"
        )
    key = lookup[key.lower()]
    return DeteriorationModel(material=key, terms=_BUILTIN[key], r2_fit=_BUILTIN_R2[key])


def predict_rul(model: DeteriorationModel, age: float, wtl: float) -> tuple:
    """Evaluate the polynomial at (age, wtl).  Returns (raw, clamped_at_zero)."""
    if age < 0:
        raise OutOfDomain(f"age must be >= 0, got {age}")
    if not 0.0 <= wtl <= 100.0:
        raise OutOfDomain(f"wall thickness loss must be in [0, 100], got {wtl}")
    raw = _evaluate(model.terms, age, wtl)
    return raw, max(raw, 0.0)


def _evaluate(terms, age, wtl) -> float:
    return float(sum(c * age**a * wtl**w for c, a, w in terms))


def _basis_exponents(degree: int):
    """All (age_power, wtl_power) with total degree <= degree, intercept first."""
    return [
        (a, w)
        for total in range(degree + 1)
        for a in range(total, -1, -1)
        for w in (total - a,)
    ]


def _design(age: np.ndarray, wtl: np.ndarray, exponents, a_scale: float, w_scale: float):
    cols = [
        (age / a_scale) ** a * (wtl / w_scale) ** w
        for a, w in exponents
    ]
    return np.column_stack(cols)


def _solve(phi: np.ndarray, y: np.ndarray):
    theta, _, rank, _ = np.linalg.lstsq(phi, y, rcond=None)
    return theta, rank < phi.shape[1]


def _r2(y: np.ndarray, fitted: np.ndarray):
    dev = y - y.mean()
    sst = float(dev @ dev)
    if sst == 0.0:
        # constant target: the intercept reproduces it exactly
        return 1.0, True
    resid = y - fitted
    return 1.0 - float(resid @ resid) / sst, False


def fit_polynomial(
    age, wtl, rul, degree: int = 2, term_selection: str = "full", material: str = "Custom"
) -> DeteriorationModel:
    """Least-squares polynomial fit of RUL on (age, wtl).

    Ages and losses are rescaled by their ranges before solving so the
    degree-3 basis stays well conditioned; reported coefficients are in raw
    units.  `term_selection` is "full" for the complete basis or "greedy" to
    add terms one at a time while R² improves by at least 0.005.
    """
    age = np.asarray(age, dtype=float)
    wtl = np.asarray(wtl, dtype=float)
    y = np.asarray(rul, dtype=float)
    if not (age.size == wtl.size == y.size):
        raise ValueError("age, wtl and rul must have equal lengths")
    if degree not in (1, 2, 3):
        raise ValueError(f"degree must be 1, 2 or 3, got {degree}")
    if term_selection not in ("full", "greedy"):
        raise ValueError(f"unknown term_selection: {term_selection!r}")
    exponents = _basis_exponents(degree)
    if y.size < len(exponents) and term_selection == "full":
        raise Underdetermined(
            f"{y.size} observations cannot determine {len(exponents)} terms"
        )
    a_scale = float(np.abs(age).max()) or 1.0
    w_scale = float(np.abs(wtl).max()) or 1.0
    phi_full = _design(age, wtl, exponents, a_scale, w_scale)

    if term_selection == "full":
        chosen = list(range(len(exponents)))
    else:
        chosen = [0]  # intercept
        remaining = list(range(1, len(exponents)))
        theta, _ = _solve(phi_full[:, chosen], y)
        best_r2, _ = _r2(y, phi_full[:, chosen] @ theta)
        while remaining and len(chosen) < y.size:
            scores = []
            for idx in remaining:
                cand = chosen + [idx]
                theta, _ = _solve(phi_full[:, cand], y)
                r2, _ = _r2(y, phi_full[:, cand] @ theta)
                scores.append((r2, idx))
            r2, idx = max(scores)
            if r2 - best_r2 < GREEDY_R2_GAIN:
                break
            chosen.append(idx)
            remaining.remove(idx)
            best_r2 = r2

    phi = phi_full[:, chosen]
    theta, degenerate = _solve(phi, y)
    r2_fit, constant_target = _r2(y, phi @ theta)
    terms = []
    for coef, idx in zip(theta, chosen):
        a_pow, w_pow = exponents[idx]
        terms.append((float(coef / (a_scale**a_pow * w_scale**w_pow)), a_pow, w_pow))
    return DeteriorationModel(
        material=material,
        terms=tuple(terms),
        r2_fit=float(r2_fit),
        degenerate=degenerate or constant_target,
    )


def halflife_check(
    model: DeteriorationModel, age: float, delta_wtl: float, baseline_wtl: float = 0.0
) -> float:
    """Fractional RUL drop when wall loss rises from baseline by delta.

    Returns (Y(age, w0) - Y(age, w0 + delta)) / Y(age, w0) on the raw
    polynomial; the baseline RUL must be positive.
    """
    base, _ = predict_rul(model, age, baseline_wtl)
    if base <= 0:
        raise NonpositiveBaseline(
            f"baseline RUL {base:.3f} at (age={age}, wtl={baseline_wtl}) is not positive"
        )
    bumped, _ = predict_rul(model, age, baseline_wtl + delta_wtl)
    return (base - bumped) / base
