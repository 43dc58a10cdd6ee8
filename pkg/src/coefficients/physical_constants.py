"""
Characteristic physical constants and their reduction to the three
dimensionless numbers of the model.
"""

import math
from dataclasses import dataclass, fields

from src.utils.errors import CoefficientError, SchemaError


@dataclass(frozen=True)
class PhysicalConstants:
    mu_e: float     # magnetic permeability
    L: float        # characteristic length
    V0: float       # characteristic velocity
    sigma: float    # conductivity
    H0: float       # characteristic magnetic field
    rho: float      # mass density
    upsilon: float  # elastic wave speed

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
                raise CoefficientError(f"physical constant {f.name} must be positive and finite, got {value!r}")

    @classmethod
    def from_document(cls, document):
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in document]
        if missing:
            raise SchemaError(f"missing physical constants: {missing}")
        unknown = set(document) - set(names)
        if unknown:
            raise SchemaError(f"unknown physical constants: {sorted(unknown)}")
        return cls(**{n: float(document[n]) for n in names})


def nondimensionalize(pc):
    """
    Returns (r, p, nu):
        r  = 1 / (mu_e L V0 sigma)        magnetic viscosity
        p  = mu_e H0^2 / (2 rho V0^2)     magnetoelastic coupling
        nu = upsilon / V0                 elastic wave speed ratio
    """
    r = 1.0 / (pc.mu_e * pc.L * pc.V0 * pc.sigma)
    p = pc.mu_e * pc.H0**2 / (2.0 * pc.rho * pc.V0**2)
    nu = pc.upsilon / pc.V0
    return r, p, nu
