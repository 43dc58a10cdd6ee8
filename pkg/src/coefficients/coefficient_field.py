"""
1-periodic coefficient fields on the torus.

Three field kinds share one small interface (evaluate, derivative,
breakpoints, to_document):
  PiecewiseCoefficient  polynomial pieces between jump points
  TrigSeries            finite real Fourier series
  CompositeField        sum of other fields
"""

import logging
from dataclasses import dataclass
from numbers import Real

import numpy as np
from numpy.polynomial import polynomial as P

from src.utils.errors import CoefficientError, SchemaError

logger = logging.getLogger("CoefficientField")

TWO_PI = 2.0 * np.pi


def wrap_unit(z):
    """Reduce z modulo 1 into [0, 1)"""
    z = np.asarray(z, dtype=float)
    frac = z - np.floor(z)
    # tiny negative inputs round up to exactly 1.0
    return np.where(frac >= 1.0, 0.0, frac)


def _as_float_list(values, what):
    try:
        out = [float(v) for v in values]
    except (TypeError, ValueError):
        raise SchemaError(f"{what} must be a list of numbers, got {values!r}")
    if not all(np.isfinite(out)):
        raise SchemaError(f"{what} contains non-finite values")
    return out


@dataclass(frozen=True)
class PiecewiseCoefficient:
    """Polynomial pieces in the local coordinate (z - z_k), right-continuous at jumps"""

    breakpoints: tuple
    pieces: tuple
    right_continuous: bool = True

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        pieces = tuple(np.atleast_1d(np.asarray(c, dtype=float)) for c in self.pieces)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", pieces)

        if any(not (0.0 < b < 1.0) for b in bps):
            raise CoefficientError(f"breakpoints must lie in the open interval (0,1): {list(bps)}")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise CoefficientError(f"breakpoints not increasing: {list(bps)}")
        if len(pieces) != len(bps) + 1:
            raise CoefficientError(
                f"expected {len(bps) + 1} pieces for {len(bps)} breakpoints, got {len(pieces)}"
            )
        for piece in pieces:
            if piece.size == 0 or not np.all(np.isfinite(piece)):
                raise CoefficientError("every piece needs at least one finite coefficient")
        if not self.right_continuous:
            raise CoefficientError("only the right-continuous convention is supported")

    @classmethod
    def constant(cls, value):
        return cls(breakpoints=(), pieces=([float(value)],))

    @property
    def edges(self):
        """Piece edges z_0=0 < z_1 < ... < z_m < z_{m+1}=1"""
        return np.concatenate(([0.0], np.asarray(self.breakpoints), [1.0]))

    def piece_index(self, z):
        frac = wrap_unit(z)
        return np.searchsorted(np.asarray(self.breakpoints), frac, side="right"), frac

    def evaluate(self, z):
        idx, frac = self.piece_index(z)
        edges = self.edges
        out = np.empty_like(frac)
        for k, coeffs in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                out[mask] = P.polyval(frac[mask] - edges[k], coeffs)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def derivative(self):
        return PiecewiseCoefficient(
            breakpoints=self.breakpoints,
            pieces=tuple(P.polyder(c) if c.size > 1 else np.zeros(1) for c in self.pieces),
        )

    def shifted(self, c):
        pieces = []
        for coeffs in self.pieces:
            coeffs = coeffs.copy()
            coeffs[0] += c
            pieces.append(coeffs)
        return PiecewiseCoefficient(self.breakpoints, tuple(pieces))

    def to_document(self):
        return {
            "breakpoints": list(self.breakpoints),
            "pieces": [[float(x) for x in c] for c in self.pieces],
        }


@dataclass(frozen=True)
class TrigSeries:
    """mean + sum_k cos_k cos(2 pi k z) + sin_k sin(2 pi k z), k = 1, 2, ..."""

    mean: float = 0.0
    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(s) for s in self.sin))

    @property
    def breakpoints(self):
        return ()

    @property
    def max_frequency(self):
        return max(len(self.cos), len(self.sin))

    def _terms(self):
        K = self.max_frequency
        c = np.zeros(K)
        s = np.zeros(K)
        c[: len(self.cos)] = self.cos
        s[: len(self.sin)] = self.sin
        return np.arange(1, K + 1), c, s

    def evaluate(self, z):
        z = np.asarray(z, dtype=float)
        k, c, s = self._terms()
        if k.size == 0:
            out = np.full(z.shape, self.mean)
        else:
            phase = TWO_PI * np.multiply.outer(z, k)
            out = self.mean + np.cos(phase) @ c + np.sin(phase) @ s
        return out if out.ndim else float(out)

    __call__ = evaluate

    def derivative(self):
        k, c, s = self._terms()
        w = TWO_PI * k
        return TrigSeries(0.0, tuple(w * s), tuple(-w * c))

    def antiderivative(self):
        """Periodic zero-mean antiderivative; requires a zero-mean field"""
        if self.mean != 0.0:
            raise CoefficientError("a periodic antiderivative needs a zero-mean integrand")
        k, c, s = self._terms()
        w = TWO_PI * k
        return TrigSeries(0.0, tuple(-s / w), tuple(c / w))

    def scaled(self, factor):
        return TrigSeries(self.mean * factor, tuple(factor * c for c in self.cos),
                          tuple(factor * s for s in self.sin))

    def __add__(self, other):
        if not isinstance(other, TrigSeries):
            return NotImplemented
        K = max(self.max_frequency, other.max_frequency)
        _, c1, s1 = _padded(self, K)
        _, c2, s2 = _padded(other, K)
        return TrigSeries(self.mean + other.mean, tuple(c1 + c2), tuple(s1 + s2))

    @classmethod
    def mode(cls, kind, frequency, amplitude=1.0):
        """Single cos/sin mode of the given integer frequency"""
        coeffs = [0.0] * frequency
        coeffs[frequency - 1] = amplitude
        if kind == "cos":
            return cls(0.0, tuple(coeffs), ())
        if kind == "sin":
            return cls(0.0, (), tuple(coeffs))
        raise SchemaError(f"unknown mode kind {kind!r}")

    def to_document(self):
        return {"fourier": {"mean": self.mean, "cos": list(self.cos), "sin": list(self.sin)}}


def _padded(series, K):
    c = np.zeros(K)
    s = np.zeros(K)
    c[: len(series.cos)] = series.cos
    s[: len(series.sin)] = series.sin
    return np.arange(1, K + 1), c, s


@dataclass(frozen=True)
class CompositeField:
    """Pointwise sum of fields"""

    parts: tuple

    @property
    def breakpoints(self):
        return merge_breakpoints(*(part.breakpoints for part in self.parts))

    def evaluate(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape)
        for part in self.parts:
            out = out + part.evaluate(z)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def derivative(self):
        return CompositeField(tuple(part.derivative() for part in self.parts))

    def to_document(self):
        return {"sum": [part.to_document() for part in self.parts]}


def add_fields(*fields):
    """Sum of fields, collapsing trigonometric parts where possible"""
    parts = []
    for field in fields:
        if isinstance(field, CompositeField):
            parts.extend(field.parts)
        else:
            parts.append(field)
    if parts and all(isinstance(p, TrigSeries) for p in parts):
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        return total
    if len(parts) == 1:
        return parts[0]
    return CompositeField(tuple(parts))


def merge_breakpoints(*lists, tol=1e-14):
    """Sorted union of breakpoint lists, points closer than tol merged"""
    merged = []
    for b in sorted(float(x) for lst in lists for x in lst):
        if not merged or b - merged[-1] > tol:
            merged.append(b)
    return tuple(merged)


def parse_coefficient(document):
    """Build a validated PiecewiseCoefficient from {"breakpoints": [...], "pieces": [[...], ...]}"""
    if isinstance(document, Real) and not isinstance(document, bool):
        return PiecewiseCoefficient.constant(document)
    if not isinstance(document, dict):
        raise SchemaError(f"coefficient document must be an object, got {type(document).__name__}")
    unknown = set(document) - {"breakpoints", "pieces"}
    if unknown:
        raise SchemaError(f"unknown coefficient keys: {sorted(unknown)}")
    if "pieces" not in document:
        raise SchemaError("coefficient document needs 'pieces'")
    breakpoints = _as_float_list(document.get("breakpoints", []), "breakpoints")
    raw_pieces = document["pieces"]
    if not isinstance(raw_pieces, list) or not raw_pieces:
        raise SchemaError("'pieces' must be a non-empty list of coefficient lists")
    pieces = []
    for i, piece in enumerate(raw_pieces):
        if isinstance(piece, Real):
            piece = [piece]
        if not isinstance(piece, list) or not piece:
            raise SchemaError(f"piece {i} must be a non-empty list of numbers")
        pieces.append(_as_float_list(piece, f"piece {i}"))
    return PiecewiseCoefficient(tuple(breakpoints), tuple(pieces))


def parse_field(document):
    """Any field document: number, coefficient schema, fourier series or sum"""
    if document is None:
        return PiecewiseCoefficient.constant(0.0)
    if isinstance(document, dict) and "fourier" in document:
        body = document["fourier"]
        if not isinstance(body, dict):
            raise SchemaError("'fourier' must be an object")
        unknown = set(body) - {"mean", "cos", "sin"}
        if unknown:
            raise SchemaError(f"unknown fourier keys: {sorted(unknown)}")
        mean = _as_float_list([body.get("mean", 0.0)], "fourier mean")[0]
        return TrigSeries(mean, tuple(_as_float_list(body.get("cos", []), "fourier cos")),
                          tuple(_as_float_list(body.get("sin", []), "fourier sin")))
    if isinstance(document, dict) and "sum" in document:
        parts = document["sum"]
        if not isinstance(parts, list) or not parts:
            raise SchemaError("'sum' must be a non-empty list of field documents")
        return CompositeField(tuple(parse_field(p) for p in parts))
    return parse_coefficient(document)


def eval_coefficient(c, z):
    """Value of the piece containing frac(z), right-continuous at breakpoints"""
    return c.evaluate(z)


def verify_bounds(c, positive=False, samples_per_piece=257):
    """
    Infimum and supremum of a field over one period.

    Polynomial pieces are checked on a dense sample plus the real critical
    points of each piece; other field kinds fall back to dense sampling.
    """
    values = []
    if isinstance(c, PiecewiseCoefficient):
        edges = c.edges
        for k, coeffs in enumerate(c.pieces):
            width = edges[k + 1] - edges[k]
            local = np.linspace(0.0, width, samples_per_piece)
            if coeffs.size > 2:
                roots = P.polyroots(P.polyder(coeffs))
                roots = roots[np.abs(roots.imag) < 1e-12].real
                local = np.concatenate((local, roots[(roots > 0.0) & (roots < width)]))
            values.append(P.polyval(local, coeffs))
    else:
        edges = np.concatenate(([0.0], np.asarray(c.breakpoints), [1.0]))
        for a, b in zip(edges[:-1], edges[1:]):
            values.append(c.evaluate(np.linspace(a, b, 4 * samples_per_piece, endpoint=False)))
    values = np.concatenate(values)
    lo, hi = float(values.min()), float(values.max())
    if positive and lo <= 0.0:
        raise CoefficientError(f"field must be positive but its minimum is {lo:.6g}")
    return lo, hi
