"""Experiment configuration: an INI document with one level of sections.

Example::

    [problem]
    dim = 2
    k = 1
    n_nodes = 128

    [body]
    kind = ellipse
    a = 1.5
    b = 1.0

    [density]
    kind = constant
    value = 1.0

    [flow]
    residual_tol = 1e-6

    [output]
    dir = out/ellipse
    snapshot_every = 500

Every key is optional except where a body or density kind needs it.
Unknown sections and keys are rejected by name.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import CapabilityError, ConfigError
from .flow import DensityField, FlowConfig
from .interior import MfsConfig, ball_radius
from .sphere import (
    DERIVATIVE_MODES,
    SphereGrid,
    SupportField,
    ball,
    check_convex,
    ellipse,
    fourier_body,
)
from .storage import load_density_file, read_snapshot

BODY_KINDS = ("ball", "ellipse", "fourier", "snapshot")
DENSITY_KINDS = ("constant", "fourier", "file")
DIRECTION_KINDS = ("ball", "translate", "fourier")


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


@dataclass(frozen=True)
class BodySpec:
    kind: str = "ball"
    radius: float = 1.0
    center: tuple = ()
    a: float = 1.0
    b: float = 1.0
    coeffs: tuple = ()
    path: str = ""
    perturbation: float = 0.0


@dataclass(frozen=True)
class DensitySpec:
    kind: str = "constant"
    value: float = 1.0
    coeffs: tuple = ()
    path: str = ""


@dataclass(frozen=True)
class HadamardSpec:
    eps: tuple = (1e-2, 1e-3, 1e-4)
    direction: str = "ball"
    direction_params: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    dim: int = 2
    k: int = 1
    n_nodes: int = 128
    derivative: str = "fd4"
    seed: int = 0
    body: BodySpec = field(default_factory=BodySpec)
    density: DensitySpec = field(default_factory=DensitySpec)
    flow: FlowConfig = field(default_factory=FlowConfig)
    mfs: MfsConfig = field(default_factory=MfsConfig)
    out_dir: str = "out"
    snapshot_every: int = 0
    hadamard: HadamardSpec = field(default_factory=HadamardSpec)
    verify_timeseries: str = ""
    base_dir: str = "."

    # ----------------------------------------------------------- builders

    @property
    def grid(self) -> SphereGrid:
        return SphereGrid.make(self.dim, self.n_nodes, self.derivative)

    def _resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else Path(self.base_dir) / q

    def initial_body(self) -> SupportField:
        g = self.grid
        b = self.body
        if b.kind == "ball":
            h = ball(g, b.radius, b.center or None)
        elif b.kind == "ellipse":
            h = ellipse(g, b.a, b.b)
        elif b.kind == "fourier":
            h = fourier_body(g, b.coeffs)
        else:
            h = read_snapshot(self._resolve(b.path), self.derivative)
            if h.dim != self.dim or h.grid.n_nodes != self.n_nodes:
                raise ConfigError(
                    f"snapshot {b.path} has dim {h.dim}, n_nodes {h.grid.n_nodes}; "
                    f"config says dim {self.dim}, n_nodes {self.n_nodes}"
                )
        if b.perturbation:
            h = SupportField(g, h.values + b.perturbation * _random_modes(g, self.seed))
        return h

    def density_field(self) -> DensityField:
        g = self.grid
        d = self.density
        if d.kind == "constant":
            return DensityField.constant(g, d.value)
        if d.kind == "fourier":
            return DensityField.fourier(g, d.coeffs)
        vals = load_density_file(self._resolve(d.path), g.n_nodes)
        return DensityField(g, vals, f"file:{d.path}")

    def hadamard_direction(self) -> SupportField:
        g = self.grid
        hs = self.hadamard
        p = hs.direction_params
        if hs.direction == "ball":
            return ball(g, p[0] if p else 1.0)
        if hs.direction == "translate":
            c = np.zeros(self.dim)
            c[: len(p)] = p[: self.dim]
            return SupportField(g, 1.0 + g.directions @ c)
        return fourier_body(g, p)


def _random_modes(grid: SphereGrid, seed: int) -> np.ndarray:
    """Smooth zero-mean random field with unit sup norm (modes 2..4)."""
    rng = np.random.default_rng(seed)
    t = grid.angles
    v = np.zeros(grid.n_nodes)
    for m in range(2, 5):
        a, b = rng.standard_normal(2) / m**2
        v += a * np.cos(m * t) + (b * np.sin(m * t) if grid.dim == 2 else 0.0)
    return v / np.max(np.abs(v))


# ------------------------------------------------------------------- parsing

_SCHEMA = {
    "problem": {"dim": int, "k": int, "n_nodes": int, "derivative": str, "seed": int},
    "body": {
        "kind": str,
        "radius": float,
        "center": _floats,
        "a": float,
        "b": float,
        "coeffs": _floats,
        "path": str,
        "perturbation": float,
    },
    "density": {"kind": str, "value": float, "coeffs": _floats, "path": str},
    "flow": {
        "dt_init": float,
        "dt_min": float,
        "dt_max": float,
        "safety": float,
        "residual_tol": float,
        "max_steps": int,
        "integrator": str,
        "growth": float,
    },
    "mfs": {
        "charge_dilation": float,
        "n_charges": int,
        "regularization": float,
        "oversampling": float,
        "ring_points": int,
        "max_condition": float,
        "placement": str,
        "normal_offset": float,
    },
    "output": {"dir": str, "snapshot_every": int},
    "hadamard": {"eps": _floats, "direction": str, "direction_params": _floats},
    "verify": {"timeseries": str},
}


def _line_of(text: str, section: str, key: str) -> int:
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
        elif cur == section and s.split("=", 1)[0].split(":", 1)[0].strip().lower() == key:
            return i
    return 0


def _read_sections(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: expected a [section] header") from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else "?"
        raise ConfigError(f"line {lineno}: cannot parse {exc.errors[0][1] if exc.errors else ''}") from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate key '{exc.option}' in [{exc.section}]") from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate section [{exc.section}]") from exc

    out = {}
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        vals = {}
        for key, raw in cp.items(sec):
            conv = _SCHEMA[sec].get(key)
            line = _line_of(text, sec, key)
            if conv is None:
                raise ConfigError(f"line {line}: unknown key '{key}' in [{sec}]")
            try:
                vals[key] = conv(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"line {line}: bad value for {sec}.{key}: {raw!r}") from exc
        out[sec] = vals
    return out


def _build(cls, values: dict, where: str):
    try:
        return cls(**values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{where}] {exc}") from exc


def parse_config(text: str, base_dir: Optional[str] = None) -> RunConfig:
    """Parse and validate a configuration document.

    ``base_dir`` anchors relative file paths (defaults to the working
    directory).  Raises :class:`ConfigError` for syntax and range problems,
    :class:`CapabilityError` for a k >= 2 run on a body other than a ball,
    and :class:`ConvexityError` if the initial body is not convex.
    """
    s = _read_sections(text)
    prob = s.get("problem", {})
    dim = prob.get("dim", 2)
    k = prob.get("k", 1)
    n_nodes = prob.get("n_nodes", 128)
    derivative = prob.get("derivative", "fd4")
    if dim not in (2, 3):
        raise ConfigError(f"problem.dim must be 2 or 3, got {dim}")
    if not 1 <= k <= dim - 1:
        raise ConfigError(f"problem.k must satisfy 1 <= k <= dim-1 = {dim - 1}, got {k}")
    if derivative not in DERIVATIVE_MODES:
        raise ConfigError(f"problem.derivative must be one of {DERIVATIVE_MODES}, got {derivative!r}")

    body = BodySpec(**s.get("body", {}))
    if body.kind not in BODY_KINDS:
        raise ConfigError(f"body.kind must be one of {BODY_KINDS}, got {body.kind!r}")
    if body.kind == "ball" and not body.radius > 0:
        raise ConfigError("body.radius must be positive")
    if body.kind == "ellipse" and not (body.a > 0 and body.b > 0):
        raise ConfigError("body.a and body.b must be positive")
    if body.kind == "fourier" and not body.coeffs:
        raise ConfigError("body.kind = fourier needs body.coeffs")
    if body.center and len(body.center) != dim:
        raise ConfigError(f"body.center needs {dim} components")

    dens = DensitySpec(**s.get("density", {}))
    if dens.kind not in DENSITY_KINDS:
        raise ConfigError(f"density.kind must be one of {DENSITY_KINDS}, got {dens.kind!r}")
    if dens.kind == "constant" and not dens.value > 0:
        raise ConfigError("density.value must be positive")
    if dens.kind == "fourier" and not dens.coeffs:
        raise ConfigError("density.kind = fourier needs density.coeffs")

    flow_vals = s.get("flow", {})
    for key in ("dt_init", "dt_min", "dt_max", "safety", "residual_tol"):
        if key in flow_vals and not flow_vals[key] > 0:
            raise ConfigError(f"flow.{key} must be positive, got {flow_vals[key]}")
    mfs = _build(MfsConfig, s.get("mfs", {}), "mfs")
    flow = _build(FlowConfig, dict(flow_vals, mfs=mfs), "flow")

    outp = s.get("output", {})
    had = s.get("hadamard", {})
    hs = HadamardSpec(**had)
    if hs.direction not in DIRECTION_KINDS:
        raise ConfigError(f"hadamard.direction must be one of {DIRECTION_KINDS}, got {hs.direction!r}")
    if not hs.eps or min(hs.eps) <= 0:
        raise ConfigError("hadamard.eps must list positive step sizes")
    if outp.get("snapshot_every", 0) < 0:
        raise ConfigError("output.snapshot_every must be >= 0")

    cfg = RunConfig(
        dim=dim,
        k=k,
        n_nodes=n_nodes,
        derivative=derivative,
        seed=prob.get("seed", 0),
        body=body,
        density=dens,
        flow=flow,
        mfs=mfs,
        out_dir=outp.get("dir", "out"),
        snapshot_every=outp.get("snapshot_every", 0),
        hadamard=hs,
        verify_timeseries=s.get("verify", {}).get("timeseries", ""),
        base_dir=str(base_dir) if base_dir is not None else ".",
    )
    return validate(cfg)


def validate(cfg: RunConfig) -> RunConfig:
    required = []
    if cfg.body.kind == "snapshot":
        required.append(("body.path", cfg.body.path))
    if cfg.density.kind == "file":
        required.append(("density.path", cfg.density.path))
    if cfg.verify_timeseries:
        required.append(("verify.timeseries", cfg.verify_timeseries))
    for label, p in required:
        if not p:
            raise ConfigError(f"{label} is required for this kind")
        if not cfg._resolve(p).is_file():
            raise ConfigError(f"{label}: file not found: {p}")
    try:
        h0 = cfg.initial_body()
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"initial body: {exc}") from exc
    if not h0.values.min() > 0:
        raise ConfigError("initial body must contain the origin in its interior (min h > 0)")
    check_convex(h0, "initial body")
    try:
        cfg.density_field()
    except ValueError as exc:
        raise ConfigError(f"density: {exc}") from exc
    if cfg.k >= 2 and ball_radius(h0) is None:
        raise CapabilityError(
            f"k = {cfg.k} is only supported on centred balls; body.kind = {cfg.body.kind}"
        )
    return cfg


def config_fields() -> dict:
    """Section -> accepted keys (used by the CLI help text)."""
    return {sec: sorted(keys) for sec, keys in _SCHEMA.items()}

