"""Run configuration: strict JSON schema, defaults, echo of the resolved config.

Unknown keys are rejected with a nearest-key suggestion; values are validated
against the type invariants before any numerics start.  The fully resolved
configuration (defaults applied) is echoed into the output directory so a run
can always be reproduced from its artifacts.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass

import numpy as np

from . import errors
from .dynamics import IntegratorSpec, stability_limit
from .experiments import Branch, Protocol
from .gaussian import GaussianMoments, gaussian_moments
from .grid import GridSpec, load_state
from .hamiltonian import HamiltonianParams, PotentialSpec

# schema: section -> key -> default (None means "required with this shape")
DEFAULTS = {
    "grid": {
        "q_min": -13.0,
        "q_max": 13.0,
        "n_q": 256,
        "x_min": -10.0,
        "x_max": 10.0,
        "n_x": 192,
        "boundary": "truncated",
    },
    "hamiltonian": {
        "m_q": 1.0,
        "m_x": 1.0,
        "hbar": 1.0,
        "v_q": [0.0, 0.0, 0.0],
        "v_x": [0.0, 0.0, 0.0],
        "schedule": [[0.0, 0.5, 2.0]],
    },
    "integrator": {
        "dt": None,  # null -> from the stability bound
        "scheme": "rk4",
        "renormalize_every": 100,
        "max_steps": 20_000_000,
        "c_stab": 0.1,
    },
    "initial": {
        "mean": [0.0, 1.0],
        "sigma": [[0.5, 0.0], [0.0, 0.5]],
        "s_grad": [0.0, 0.0],
        "s_hess": [[0.0, 0.0], [0.0, 0.0]],
        "checkpoint": None,  # path; overrides the Gaussian fields when set
    },
    "protocol": {
        "t_end": 1.25,
        "sample_dt": 0.005,
        "solver": "grid",
        "branch": {"kind": "scale_mq", "factor": 2.0, "v_q": [0.0, 0.0, 0.5]},
        "detection_threshold": None,
    },
    "simulate": {
        "t_start": 0.0,
        "t_end": 1.0,
        "sample_dt": 0.01,
    },
    "bracket_check": {
        "n_states": 20,
        "grid_n": 96,
    },
    "seed": 0,
    "figures": True,
}


@dataclass
class RunConfig:
    """Validated, fully-typed run configuration."""

    raw: dict
    grid: GridSpec
    params: HamiltonianParams
    integrator: IntegratorSpec
    initial: GaussianMoments | str  # moments, or a checkpoint path
    protocol_branch: Branch
    protocol_t_end: float
    protocol_sample_dt: float
    protocol_solver: str
    detection_threshold: float | None
    simulate_span: tuple[float, float, float]  # t_start, t_end, sample_dt
    bracket_states: int
    bracket_grid_n: int
    seed: int
    figures: bool

    def protocol(self) -> Protocol:
        if isinstance(self.initial, str):
            raise errors.SchemaError(
                "signaling protocols need Gaussian initial moments, not a checkpoint"
            )
        return Protocol(
            initial=self.initial,
            params=self.params,
            branch=self.protocol_branch,
            t_end=self.protocol_t_end,
            sample_dt=self.protocol_sample_dt,
            solver=self.protocol_solver,
            grid=self.grid,
            detection_threshold=self.detection_threshold,
        )

    def initial_state(self):
        from .gaussian import moments_to_state

        if isinstance(self.initial, str):
            return load_state(self.initial)
        return moments_to_state(self.initial, self.grid)


def _flatten_keys(schema, prefix=""):
    out = []
    for key, val in schema.items():
        path = f"{prefix}{key}"
        out.append(path)
        if isinstance(val, dict):
            out.extend(_flatten_keys(val, path + "."))
    return out


_ALL_KEYS = _flatten_keys(DEFAULTS)


def _reject_unknown(user: dict, schema: dict, prefix: str = "") -> None:
    for key, val in user.items():
        path = f"{prefix}{key}"
        if key not in schema:
            hint = difflib.get_close_matches(path, _ALL_KEYS, n=1)
            suggestion = f"; did you mean {hint[0]!r}?" if hint else ""
            raise errors.SchemaError(f"unknown configuration key {path!r}{suggestion}")
        if isinstance(schema[key], dict) and isinstance(val, dict):
            _reject_unknown(val, schema[key], path + ".")


def _merge(user: dict, schema: dict) -> dict:
    out = {}
    for key, default in schema.items():
        if key in user and isinstance(default, dict) and isinstance(user[key], dict):
            out[key] = _merge(user[key], default)
        elif key in user:
            out[key] = user[key]
        else:
            out[key] = default
    return out


def parse_config(text: str) -> RunConfig:
    """Parse, validate, and complete a JSON configuration."""
    try:
        user = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise errors.SchemaError(f"configuration is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise errors.SchemaError("configuration root must be a JSON object")
    _reject_unknown(user, DEFAULTS)
    cfg = _merge(user, DEFAULTS)

    g = cfg["grid"]
    try:
        grid = GridSpec(
            float(g["q_min"]), float(g["q_max"]), int(g["n_q"]),
            float(g["x_min"]), float(g["x_max"]), int(g["n_x"]),
            str(g["boundary"]),
        )
    except (TypeError, ValueError) as exc:
        raise errors.SchemaError(f"bad grid value: {exc}") from exc

    h = cfg["hamiltonian"]
    for key in ("m_q", "m_x", "hbar"):
        if not isinstance(h[key], (int, float)) or h[key] <= 0:
            raise errors.RangeError(f"hamiltonian.{key} must be a positive number")
    for key in ("v_q", "v_x"):
        if not (isinstance(h[key], list) and len(h[key]) == 3):
            raise errors.RangeError(f"hamiltonian.{key} must be [a0, a1, a2]")
    schedule = tuple(tuple(float(v) for v in w) for w in h["schedule"])
    params = HamiltonianParams(
        m_q=float(h["m_q"]),
        m_x=float(h["m_x"]),
        hbar=float(h["hbar"]),
        potential=PotentialSpec(tuple(h["v_q"]), tuple(h["v_x"])),
        interaction_schedule=schedule,
    )

    i = cfg["integrator"]
    dt = i["dt"]
    if dt is None:
        dt = stability_limit(grid, params, float(i["c_stab"]))
        cfg["integrator"]["dt"] = dt
    integrator = IntegratorSpec(
        dt=float(dt),
        scheme=str(i["scheme"]),
        renormalize_every=int(i["renormalize_every"]),
        max_steps=int(i["max_steps"]),
        c_stab=float(i["c_stab"]),
    )

    init = cfg["initial"]
    if init["checkpoint"]:
        initial: GaussianMoments | str = str(init["checkpoint"])
    else:
        initial = gaussian_moments(
            mean=init["mean"], sigma=init["sigma"],
            s_grad=init["s_grad"], s_hess=init["s_hess"],
        )

    p = cfg["protocol"]
    b = p["branch"]
    branch = Branch(str(b["kind"]), float(b["factor"]), tuple(b["v_q"]))
    if p["solver"] not in ("grid", "moments", "both"):
        raise errors.RangeError("protocol.solver must be grid, moments or both")

    s = cfg["simulate"]
    if not s["t_end"] > s["t_start"]:
        raise errors.RangeError("simulate.t_end must exceed simulate.t_start")

    return RunConfig(
        raw=cfg,
        grid=grid,
        params=params,
        integrator=integrator,
        initial=initial,
        protocol_branch=branch,
        protocol_t_end=float(p["t_end"]),
        protocol_sample_dt=float(p["sample_dt"]),
        protocol_solver=str(p["solver"]),
        detection_threshold=None if p["detection_threshold"] is None else float(p["detection_threshold"]),
        simulate_span=(float(s["t_start"]), float(s["t_end"]), float(s["sample_dt"])),
        bracket_states=int(cfg["bracket_check"]["n_states"]),
        bracket_grid_n=int(cfg["bracket_check"]["grid_n"]),
        seed=int(cfg["seed"]),
        figures=bool(cfg["figures"]),
    )


def apply_overrides(text: str, overrides: list[str]) -> str:
    """Apply repeated --set key=value flags (dotted paths) to raw JSON text."""
    data = json.loads(text) if text.strip() else {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise errors.SchemaError(f"--set expects key=value, got {item!r}")
        path = key.strip().split(".")
        node = data
        schema = DEFAULTS
        for part in path[:-1]:
            if not isinstance(schema, dict) or part not in schema:
                hint = difflib.get_close_matches(key.strip(), _ALL_KEYS, n=1)
                suggestion = f"; did you mean {hint[0]!r}?" if hint else ""
                raise errors.SchemaError(f"unknown configuration key {key!r}{suggestion}")
            schema = schema[part]
            node = node.setdefault(part, {})
        leaf = path[-1]
        if not isinstance(schema, dict) or leaf not in schema:
            hint = difflib.get_close_matches(key.strip(), _ALL_KEYS, n=1)
            suggestion = f"; did you mean {hint[0]!r}?" if hint else ""
            raise errors.SchemaError(f"unknown configuration key {key!r}{suggestion}")
        node[leaf] = json.loads(value)
    return json.dumps(data)


def resolved_config_text(config: RunConfig) -> str:
    """Deterministic serialization of the completed configuration."""
    return json.dumps(config.raw, indent=2, sort_keys=True) + "\n"
