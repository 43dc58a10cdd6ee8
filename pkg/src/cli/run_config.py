"""
Run configuration and run report documents.
"""

import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field

from src.basis.galerkin_basis import DEFAULT_Q, build_basis, build_grid, default_panels
from src.diagnostics.report import DEFAULT_DIAGNOSTICS
from src.galerkin.problem_spec import breakpoints, parse_problem
from src.timestepper.integrator import IntegratorConfig
from src.utils.errors import SchemaError

logger = logging.getLogger("RunConfig")

RUN_KEYS = {"problem", "discretization", "integrator", "outputs"}
DISCRETIZATION_KEYS = {"N", "panels_per_piece", "q"}
OUTPUT_KEYS = {"diagnostics", "times", "directory", "jump_delta", "jump_times"}
KNOWN_DIAGNOSTICS = set(DEFAULT_DIAGNOSTICS)


def canonical_json(document):
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def document_hash(document):
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()[:16]


def load_document(path):
    try:
        with open(path, "r") as f:
            return json.load(f)
    except FileNotFoundError:
        raise SchemaError(f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {str(e)}")


def build_problem(document):
    """ProblemSpec from a problem document, or from {"manufactured": name} for a standard case"""
    if isinstance(document, dict) and "manufactured" in document:
        from src.experiments.manufactured import manufactured_problem, standard_cases

        unknown = set(document) - {"manufactured", "T"}
        if unknown:
            raise SchemaError(f"unknown keys next to 'manufactured': {sorted(unknown)}")
        cases = standard_cases()
        name = document["manufactured"]
        if name not in cases:
            raise SchemaError(f"unknown manufactured case {name!r}, expected one of {sorted(cases)}")
        return manufactured_problem(cases[name], T=document.get("T"))
    return parse_problem(document)


@dataclass(frozen=True)
class Discretization:
    N: int = 16
    panels_per_piece: int = None
    q: int = DEFAULT_Q

    @classmethod
    def from_document(cls, document):
        document = document or {}
        if not isinstance(document, dict):
            raise SchemaError("'discretization' must be an object")
        unknown = set(document) - DISCRETIZATION_KEYS
        if unknown:
            raise SchemaError(f"unknown discretization keys: {sorted(unknown)}")
        N = document.get("N", 16)
        if isinstance(N, bool) or not isinstance(N, int) or N < 1:
            raise SchemaError(f"N must be a positive integer, got {N!r}")
        panels = document.get("panels_per_piece")
        if panels is not None and (isinstance(panels, bool) or not isinstance(panels, int) or panels < 1):
            raise SchemaError(f"panels_per_piece must be a positive integer, got {panels!r}")
        q = document.get("q", DEFAULT_Q)
        if isinstance(q, bool) or not isinstance(q, int) or q < 2:
            raise SchemaError(f"q must be an integer >= 2, got {q!r}")
        return cls(N=N, panels_per_piece=panels, q=q)

    def build(self, spec):
        basis = build_basis(self.N)
        grid = build_grid(breakpoints(spec), self.panels_per_piece or default_panels(self.N), self.q)
        return basis, grid


@dataclass(frozen=True)
class OutputRequest:
    diagnostics: tuple = DEFAULT_DIAGNOSTICS
    times: tuple = ()
    directory: str = None
    jump_delta: float = None
    jump_times: tuple = None

    @classmethod
    def from_document(cls, document):
        document = document or {}
        if not isinstance(document, dict):
            raise SchemaError("'outputs' must be an object")
        unknown = set(document) - OUTPUT_KEYS
        if unknown:
            raise SchemaError(f"unknown output keys: {sorted(unknown)}")
        diagnostics = tuple(document.get("diagnostics", DEFAULT_DIAGNOSTICS))
        bad = set(diagnostics) - KNOWN_DIAGNOSTICS
        if bad:
            raise SchemaError(f"unknown diagnostics {sorted(bad)}, expected among {sorted(KNOWN_DIAGNOSTICS)}")
        try:
            times = tuple(float(t) for t in document.get("times", []))
            jump_times = document.get("jump_times")
            jump_times = tuple(float(t) for t in jump_times) if jump_times is not None else None
        except (TypeError, ValueError):
            raise SchemaError("output times must be lists of numbers")
        return cls(
            diagnostics=diagnostics,
            times=times,
            directory=document.get("directory"),
            jump_delta=document.get("jump_delta"),
            jump_times=jump_times,
        )


@dataclass(frozen=True, eq=False)
class RunConfig:
    document: dict
    spec: object
    discretization: Discretization
    integrator: IntegratorConfig
    outputs: OutputRequest
    config_hash: str = field(default="")

    @classmethod
    def from_document(cls, document):
        if not isinstance(document, dict):
            raise SchemaError("run config must be an object")
        unknown = set(document) - RUN_KEYS
        if unknown:
            raise SchemaError(f"unknown run config keys: {sorted(unknown)}")
        if "problem" not in document:
            raise SchemaError("run config needs a 'problem' section")
        spec = build_problem(document["problem"])
        outputs = OutputRequest.from_document(document.get("outputs"))
        for t in outputs.times:
            if not (0.0 <= t <= spec.T):
                raise SchemaError(f"output time {t} outside [0, {spec.T}]")
        return cls(
            document=copy.deepcopy(document),
            spec=spec,
            discretization=Discretization.from_document(document.get("discretization")),
            integrator=IntegratorConfig.from_document(document.get("integrator")),
            outputs=outputs,
            config_hash=document_hash(document),
        )


def is_run_report(document):
    return isinstance(document, dict) and "config" in document and "config_hash" in document


def build_run_report(config, traj, diagnostics, status="ok"):
    """Self-contained report: config echo plus trajectory summary and diagnostics"""
    last = traj.ledger[-1]
    return {
        "config_hash": config.config_hash,
        "config": copy.deepcopy(config.document),
        "summary": {
            "N": traj.N,
            "T": traj.T,
            "samples": int(traj.times.size),
            "stats": dict(traj.stats),
            "final_energy": last.total,
            "norms": diagnostics.get("norms", {}),
        },
        "diagnostics": diagnostics,
        "status": status,
    }
