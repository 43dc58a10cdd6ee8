"""
Space-time forcing fields j_1, j_2, f as finite sums of separable terms
time_profile(t) * spatial_factor(z).
"""

import logging
from dataclasses import dataclass
from numbers import Real

import numpy as np

from src.coefficients.coefficient_field import merge_breakpoints, parse_field
from src.utils.errors import SchemaError

logger = logging.getLogger("Forcing")

TIME_KINDS = ("exp", "poly", "trig")


@dataclass(frozen=True)
class TimeProfile:
    """
    Smooth scalar function of time.

    exp:  params [A, lam]        -> A exp(lam t)
    poly: params [c0, c1, ...]   -> sum c_i t^i
    trig: params [A, w, phi=0]   -> A cos(w t + phi)
    """

    kind: str
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in TIME_KINDS:
            raise SchemaError(f"unknown time profile kind {self.kind!r}, expected one of {TIME_KINDS}")
        needed = {"exp": 2, "poly": 1, "trig": 2}[self.kind]
        if len(self.params) < needed:
            raise SchemaError(f"time profile {self.kind!r} needs at least {needed} params")
        if self.kind == "exp" and len(self.params) != 2:
            raise SchemaError("time profile 'exp' takes exactly [A, lam]")
        if self.kind == "trig" and len(self.params) > 3:
            raise SchemaError("time profile 'trig' takes [A, w] or [A, w, phi]")
        if not all(np.isfinite(self.params)):
            raise SchemaError("time profile params must be finite")

    @classmethod
    def constant(cls, value=1.0):
        return cls("poly", (float(value),))

    def evaluate(self, t, order=0):
        """Value of the order-th time derivative (order 0, 1 or 2)"""
        t = np.asarray(t, dtype=float)
        if self.kind == "exp":
            A, lam = self.params
            out = A * lam**order * np.exp(lam * t)
        elif self.kind == "trig":
            A, w = self.params[:2]
            phi = self.params[2] if len(self.params) == 3 else 0.0
            # d/dt cos = -sin, d2/dt2 cos = -cos
            shifted = w * t + phi + 0.5 * np.pi * order
            out = A * w**order * np.cos(shifted)
        else:
            coeffs = np.polynomial.polynomial.polyder(np.asarray(self.params), order) if order else np.asarray(self.params)
            out = np.polynomial.polynomial.polyval(t, coeffs)
        return out if np.ndim(out) else float(out)

    __call__ = evaluate

    def scaled(self, factor):
        if self.kind == "poly":
            return TimeProfile("poly", tuple(factor * c for c in self.params))
        return TimeProfile(self.kind, (factor * self.params[0],) + self.params[1:])

    def to_document(self):
        return {"kind": self.kind, "params": list(self.params)}


@dataclass(frozen=True)
class ForcingTerm:
    time: TimeProfile
    space: object


@dataclass(frozen=True)
class ForcingField:
    terms: tuple = ()

    @classmethod
    def zero(cls):
        return cls(())

    @classmethod
    def stationary(cls, space):
        return cls((ForcingTerm(TimeProfile.constant(1.0), space),))

    @property
    def breakpoints(self):
        return merge_breakpoints(*(term.space.breakpoints for term in self.terms))

    @property
    def is_zero(self):
        return not self.terms

    def evaluate(self, t, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape)
        for term in self.terms:
            out = out + term.time(t) * term.space.evaluate(z)
        return out

    __call__ = evaluate

    def bind(self, nodes):
        """Tabulate spatial factors on fixed nodes; returns a callable t -> nodal values"""
        return BoundForcing(self, nodes)

    def scaled(self, factor):
        return ForcingField(tuple(ForcingTerm(term.time.scaled(factor), term.space) for term in self.terms))

    def __add__(self, other):
        if not isinstance(other, ForcingField):
            return NotImplemented
        return ForcingField(self.terms + other.terms)

    def to_document(self):
        return {
            "terms": [{"time": term.time.to_document(), "space": term.space.to_document()} for term in self.terms]
        }


class BoundForcing:
    """Forcing with its spatial factors cached on a node set"""

    def __init__(self, field, nodes):
        self.field = field
        self.nodes = np.asarray(nodes, dtype=float)
        self._profiles = [term.time for term in field.terms]
        if field.terms:
            self._table = np.stack([term.space.evaluate(self.nodes) for term in field.terms])
        else:
            self._table = np.zeros((0, self.nodes.size))

    @property
    def is_zero(self):
        return not self._profiles

    def __call__(self, t):
        if not self._profiles:
            return np.zeros(self.nodes.size)
        weights = np.array([profile(t) for profile in self._profiles])
        return weights @ self._table


def parse_time_profile(document):
    if not isinstance(document, dict):
        raise SchemaError("time profile must be an object with 'kind' and 'params'")
    unknown = set(document) - {"kind", "params"}
    if unknown:
        raise SchemaError(f"unknown time profile keys: {sorted(unknown)}")
    params = document.get("params", [])
    if not isinstance(params, list):
        raise SchemaError("time profile 'params' must be a list")
    try:
        return TimeProfile(document.get("kind"), tuple(float(p) for p in params))
    except (TypeError, ValueError):
        raise SchemaError(f"time profile params must be numbers, got {params!r}")


def parse_forcing(document):
    """
    Forcing document {"terms": [{"time": {...}, "space": <field>}, ...]}.

    A missing document, or any plain field document, is accepted:
    None means zero forcing, a field means that field held constant in time.
    """
    if document is None:
        return ForcingField.zero()
    if isinstance(document, Real) and not isinstance(document, bool):
        if float(document) == 0.0:
            return ForcingField.zero()
        return ForcingField.stationary(parse_field(document))
    if not isinstance(document, dict):
        raise SchemaError("forcing must be an object")
    if "terms" not in document:
        return ForcingField.stationary(parse_field(document))
    unknown = set(document) - {"terms"}
    if unknown:
        raise SchemaError(f"unknown forcing keys: {sorted(unknown)}")
    raw_terms = document["terms"]
    if not isinstance(raw_terms, list):
        raise SchemaError("forcing 'terms' must be a list")
    terms = []
    for i, raw in enumerate(raw_terms):
        if not isinstance(raw, dict) or "space" not in raw:
            raise SchemaError(f"forcing term {i} needs a 'space' field")
        time = parse_time_profile(raw["time"]) if "time" in raw else TimeProfile.constant(1.0)
        terms.append(ForcingTerm(time, parse_field(raw["space"])))
    return ForcingField(tuple(terms))
