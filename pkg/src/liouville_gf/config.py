"""Run configuration: INI sections with validated values.

Every key has a default, so an empty file reproduces the four-site
benchmark. ``fidelity`` and ``shots`` accept comma lists and span the
experiment matrix; all other keys are scalars (or mode lists).
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .backend import MAX_QUBITS
from .recursion import SIGN_CONVENTIONS

OUTPUT_ROOT_ENV = "LIOUVILLE_GF_OUTPUT_ROOT"
AUTO = "auto"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    sites: int = 4
    t: float = 1.0
    U: float = 4.0
    mu: float = 2.0


@dataclass(frozen=True)
class RecursionConfig:
    k_max: int = 30
    tol_beta: float | None = None  # None: derived from shots
    prune_tol: float = 1e-12
    sign_convention: str = "f_H"
    seeds: tuple[int, ...] | None = None  # None: chosen from ``symmetry``
    offdiag_targets: tuple[int, ...] | None = None  # None: all same-spin modes
    symmetry: str = AUTO  # auto | on | off
    negative_policy: str = "raise"


@dataclass(frozen=True)
class BackendConfig:
    shots: tuple[int, ...] = (0,)
    rng_seed: int = 0
    fidelity: tuple[float, ...] = (1.0,)
    n_mix: int = 6
    state_seed: int = 7


@dataclass(frozen=True)
class SpectraConfig:
    eta: float = 0.05
    omega_min: float = -10.0
    omega_max: float = 10.0
    omega_step: float = 0.01
    iterations: tuple[int, ...] = (6, 30)


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    recursion: RecursionConfig = field(default_factory=RecursionConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    spectra: SpectraConfig = field(default_factory=SpectraConfig)
    output_dir: str = "results"

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def cells(self) -> list[tuple[float, int]]:
        return [(f, s) for f in self.backend.fidelity for s in self.backend.shots]

    def use_symmetry(self, fidelity: float, shots: int) -> bool:
        mode = self.recursion.symmetry
        if mode == AUTO:
            # reflection and spin symmetry hold only for the exact ground state
            return fidelity == 1.0 and shots == 0
        return mode == "on"

    def seed_modes(self, fidelity: float, shots: int) -> tuple[int, ...]:
        if self.recursion.seeds is not None:
            return self.recursion.seeds
        L = self.model.sites
        if self.use_symmetry(fidelity, shots):
            return tuple(range((L + 1) // 2))
        return tuple(range(2 * L))

    def resolve_output(self, override: str | os.PathLike | None = None) -> Path:
        path = Path(override if override is not None else self.output_dir)
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not path.is_absolute():
            path = Path(root) / path
        return path


_SECTIONS = {
    "model": ("sites", "t", "U", "mu"),
    "recursion": (
        "k_max", "tol_beta", "prune_tol", "sign_convention", "seeds",
        "offdiag_targets", "symmetry", "negative_policy",
    ),
    "backend": ("shots", "rng_seed", "fidelity", "n_mix", "state_seed"),
    "spectra": ("eta", "omega_min", "omega_max", "omega_step", "iterations"),
    "output": ("output_dir",),
}


def _int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _float(raw: str, key: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite")
    return value


def _list(raw: str, key: str, conv) -> tuple:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"{key}: empty list")
    return tuple(conv(s, key) for s in items)


def _optional_modes(raw: str, key: str):
    if raw.strip().lower() == AUTO:
        return None
    if raw.strip().lower() == "none":
        return ()
    return _list(raw, key, _int)


def parse_config(text: str, overrides: dict[str, str] | None = None) -> RunConfig:
    """Parse INI text, apply ``section.key`` overrides and validate."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keep U distinct from u
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    for dotted, value in (overrides or {}).items():
        section, sep, key = dotted.partition(".")
        if not sep:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)

    values: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            values.setdefault(section, {})[key] = raw
    return _build(values)


def _build(v: dict[str, dict[str, str]]) -> RunConfig:
    m, r, b, s = (v.get(k, {}) for k in ("model", "recursion", "backend", "spectra"))
    dm, dr, db, ds = ModelConfig(), RecursionConfig(), BackendConfig(), SpectraConfig()

    model = ModelConfig(
        sites=_int(m["sites"], "model.sites") if "sites" in m else dm.sites,
        t=_float(m["t"], "model.t") if "t" in m else dm.t,
        U=_float(m["U"], "model.U") if "U" in m else dm.U,
        mu=_float(m["mu"], "model.mu") if "mu" in m else dm.mu,
    )
    if not 1 <= model.sites <= MAX_QUBITS // 2:
        raise ConfigError(f"model.sites must lie in [1, {MAX_QUBITS // 2}]")

    tol_raw = r.get("tol_beta", AUTO).strip().lower()
    rec = RecursionConfig(
        k_max=_int(r["k_max"], "recursion.k_max") if "k_max" in r else dr.k_max,
        tol_beta=None if tol_raw == AUTO else _float(tol_raw, "recursion.tol_beta"),
        prune_tol=_float(r["prune_tol"], "recursion.prune_tol") if "prune_tol" in r else dr.prune_tol,
        sign_convention=r.get("sign_convention", dr.sign_convention).strip(),
        seeds=_optional_modes(r["seeds"], "recursion.seeds") if "seeds" in r else None,
        offdiag_targets=_optional_modes(r["offdiag_targets"], "recursion.offdiag_targets")
        if "offdiag_targets" in r
        else None,
        symmetry=r.get("symmetry", dr.symmetry).strip().lower(),
        negative_policy=r.get("negative_policy", dr.negative_policy).strip().lower(),
    )
    if not 1 <= rec.k_max <= 500:
        raise ConfigError("recursion.k_max must lie in [1, 500]")
    if rec.tol_beta is not None and rec.tol_beta <= 0:
        raise ConfigError("recursion.tol_beta must be positive")
    if not 0 <= rec.prune_tol < 1e-3:
        raise ConfigError("recursion.prune_tol must lie in [0, 1e-3)")
    if rec.sign_convention not in SIGN_CONVENTIONS:
        raise ConfigError(f"recursion.sign_convention must be one of {SIGN_CONVENTIONS}")
    if rec.symmetry not in (AUTO, "on", "off"):
        raise ConfigError("recursion.symmetry must be auto, on or off")
    if rec.negative_policy not in ("raise", "clamp"):
        raise ConfigError("recursion.negative_policy must be raise or clamp")
    n_modes = 2 * model.sites
    for name, modes in (("seeds", rec.seeds), ("offdiag_targets", rec.offdiag_targets)):
        if modes is not None and any(not 0 <= p < n_modes for p in modes):
            raise ConfigError(f"recursion.{name} must be modes in [0, {n_modes})")
    if rec.seeds == ():
        raise ConfigError("recursion.seeds must not be empty")

    back = BackendConfig(
        shots=_list(b["shots"], "backend.shots", _int) if "shots" in b else db.shots,
        rng_seed=_int(b["rng_seed"], "backend.rng_seed") if "rng_seed" in b else db.rng_seed,
        fidelity=_list(b["fidelity"], "backend.fidelity", _float) if "fidelity" in b else db.fidelity,
        n_mix=_int(b["n_mix"], "backend.n_mix") if "n_mix" in b else db.n_mix,
        state_seed=_int(b["state_seed"], "backend.state_seed") if "state_seed" in b else db.state_seed,
    )
    if any(x < 0 for x in back.shots):
        raise ConfigError("backend.shots must be non-negative")
    if any(not 0.0 < f <= 1.0 for f in back.fidelity):
        raise ConfigError("backend.fidelity must lie in (0, 1]")
    if back.rng_seed < 0 or back.state_seed < 0:
        raise ConfigError("seeds must be non-negative")
    if back.n_mix < 1:
        raise ConfigError("backend.n_mix must be at least 1")

    spec = SpectraConfig(
        eta=_float(s["eta"], "spectra.eta") if "eta" in s else ds.eta,
        omega_min=_float(s["omega_min"], "spectra.omega_min") if "omega_min" in s else ds.omega_min,
        omega_max=_float(s["omega_max"], "spectra.omega_max") if "omega_max" in s else ds.omega_max,
        omega_step=_float(s["omega_step"], "spectra.omega_step") if "omega_step" in s else ds.omega_step,
        iterations=_list(s["iterations"], "spectra.iterations", _int) if "iterations" in s else ds.iterations,
    )
    if spec.eta <= 0:
        raise ConfigError("spectra.eta must be positive")
    if spec.omega_step <= 0 or spec.omega_max <= spec.omega_min:
        raise ConfigError("spectra grid needs omega_min < omega_max and omega_step > 0")
    if (spec.omega_max - spec.omega_min) / spec.omega_step > 1e6:
        raise ConfigError("spectra grid exceeds 1e6 points")
    if any(k < 1 for k in spec.iterations):
        raise ConfigError("spectra.iterations must be positive")

    out = v.get("output", {}).get("output_dir", "results").strip()
    if not out:
        raise ConfigError("output.output_dir must not be empty")
    return RunConfig(model, rec, back, spec, out)


def load_config(path: str | os.PathLike, overrides: dict[str, str] | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)


def parse_overrides(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} must look like section.key=value")
        out[key.strip()] = value.strip()
    return out
