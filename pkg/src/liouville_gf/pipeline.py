"""Orchestration and persistence for the run, oracle and report verbs.

A run covers every (fidelity, shots) cell of the config. A single cell
writes straight into the output directory; several cells each get a
subdirectory. Files are written atomically and contain no timestamps, so
identical configs give byte-identical data files; only the wall-clock
section of ``manifest.json`` differs between runs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

from .backend import (
    MeasurementBackend,
    QuantumState,
    exact_ground_state,
    expectation,
    make_approximate_state,
    sector_indices,
)
from .config import ConfigError, RunConfig, load_config
from .greens import ContinuedFraction, frequency_grid, offdiag_residues, poles_residues, spectral_density
from .lattice import LatticeModel, build_hubbard, h0_matrix
from .metrics import ConvergenceSeries, convergence_series, line_fit
from .oracle import MAX_SITES, lehmann_greens
from .recursion import STOP_BETA, NegativeNorm, RecursionOutput, run_recursion

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NEGATIVE_NORM = 3

REPORT_FIDELITIES = (0.999, 0.963, 0.768)
SLOPE_RANGE = (-0.5, -0.15)


def artifact_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# file helpers -----------------------------------------------------------------


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _num(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else format(x, ".17g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    return obj


def _json_text(obj) -> str:
    return json.dumps(_json_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


@dataclass
class _Writer:
    root: Path
    files: list[Path] = field(default_factory=list)

    def write(self, rel: str | Path, text: str) -> None:
        path = self.root / rel
        atomic_write(path, text)
        self.files.append(path)

    def inventory(self) -> list[dict]:
        return [
            {"path": p.relative_to(self.root).as_posix(), "sha256": sha256_file(p), "bytes": p.stat().st_size}
            for p in self.files
        ]


# shared setup -------------------------------------------------------------------


@dataclass
class Problem:
    model: LatticeModel
    H: object
    ground: QuantumState
    energy: float


def build_problem(config: RunConfig) -> Problem:
    mc = config.model
    model = LatticeModel(sites=mc.sites, t=mc.t, U=mc.U, mu=mc.mu)
    H = build_hubbard(model)
    ground, energy = exact_ground_state(H, model)
    return Problem(model, H, ground, energy)


def mix_count(problem: Problem, config: RunConfig) -> int:
    """Configured admixture size, capped by the excited states of the sector."""
    sector = sector_indices(problem.model, *problem.ground.sector).shape[0]
    return min(config.backend.n_mix, sector - 1)


def prepare_state(problem: Problem, config: RunConfig, fidelity: float) -> QuantumState:
    if fidelity == 1.0:
        return problem.ground
    n_mix = mix_count(problem, config)
    if n_mix < 1:
        raise ValueError("the ground-state sector has no excited states to admix")
    b = config.backend
    return make_approximate_state(problem.ground, fidelity, n_mix, b.state_seed, problem.H, problem.model)


def targets_for(config: RunConfig, model: LatticeModel, seed: int) -> tuple[int, ...]:
    _, spin = model.site_spin(seed)
    if config.recursion.offdiag_targets is None:
        return tuple(p for p in range(model.n_qubits) if model.site_spin(p)[1] == spin and p != seed)
    return tuple(p for p in config.recursion.offdiag_targets if model.site_spin(p)[1] == spin and p != seed)


def reference_forms(problem: Problem):
    if problem.model.sites > MAX_SITES:
        return None
    return lehmann_greens(problem.H, problem.model, problem.ground, problem.energy)


# run ----------------------------------------------------------------------------


@dataclass
class CellResult:
    fidelity: float
    shots: int
    outputs: list[RecursionOutput]
    energy_expectation: float
    series: ConvergenceSeries | None
    aborted: NegativeNorm | None = None
    symmetric: bool = True


def run_cell(config: RunConfig, problem: Problem, fidelity: float, shots: int, references=None) -> CellResult:
    state = prepare_state(problem, config, fidelity)
    backend = MeasurementBackend(shots=shots, rng_seed=config.backend.rng_seed)
    rc = config.recursion
    outputs, aborted = [], None
    for seed in config.seed_modes(fidelity, shots):
        try:
            out = run_recursion(
                problem.model, problem.H, seed, state, backend,
                k_max=rc.k_max, tol_beta=rc.tol_beta, offdiag_targets=targets_for(config, problem.model, seed),
                sign_convention=rc.sign_convention, prune_tol=rc.prune_tol, negative_policy=rc.negative_policy,
            )
        except NegativeNorm as exc:
            outputs.append(exc.output)
            aborted = exc
            break
        outputs.append(out)
    e_state = float(expectation(state, problem.H).real)
    symmetric = config.use_symmetry(fidelity, shots)
    reference = None
    if references is not None:
        first = outputs[0].seed_mode
        reference = references[(first, first)]
    series = None
    if outputs and outputs[0].alphas:
        series = convergence_series(
            outputs, problem.model, reference, e_state, h0_matrix(problem.model),
            reflect=symmetric, paramagnetic=symmetric,
        )
    return CellResult(fidelity, shots, outputs, e_state, series, aborted, symmetric)


def cell_name(fidelity: float, shots: int) -> str:
    return f"fid{fidelity:g}_shots{shots}"


def write_cell(w: _Writer, rel: Path, config: RunConfig, problem: Problem, cell: CellResult) -> None:
    doc = {
        "config_hash": config.config_hash(),
        "model": config.model.__dict__,
        "fidelity": cell.fidelity,
        "shots": cell.shots,
        "rng_seed": config.backend.rng_seed,
        "ground_state_energy": problem.energy,
        "energy_expectation": cell.energy_expectation,
        "symmetry": cell.symmetric,
        "aborted": None
        if cell.aborted is None
        else {"seed": cell.outputs[-1].seed_mode, "iteration": cell.aborted.iteration, "beta_sq": cell.aborted.beta_sq},
        "runs": [o.to_dict() for o in cell.outputs],
    }
    w.write(rel / "coefficients.json", _json_text(doc))

    sp = config.spectra
    grid = frequency_grid(sp.omega_min, sp.omega_max, sp.omega_step)
    for out in cell.outputs:
        for k in sp.iterations:
            # a clean termination is exact, so later iterations reuse it
            if k > out.iterations and out.terminated != STOP_BETA:
                continue
            cf = ContinuedFraction.from_recursion(out, k)
            forms = {out.seed_mode: poles_residues(cf)}
            for target, m in sorted(out.m_coeffs.items()):
                forms[target] = offdiag_residues(cf, m[: cf.k + 1])
            for target, form in sorted(forms.items()):
                density = spectral_density(form, grid, sp.eta)
                w.write(rel / f"spectrum_{out.seed_mode}_{target}_{k}.csv", density.to_csv())

    records = cell.series.records if cell.series else []
    w.write(
        rel / "energy.csv",
        _csv_text(
            ["k", "E_gm", "E_expect", "E0"],
            [[r.k, _num(r.energy_gm), _num(r.energy_expectation), _num(problem.energy)] for r in records],
        ),
    )
    w.write(
        rel / "convergence.csv",
        _csv_text(
            ["k", "d", "p", "E_gm", "E_expect"],
            [[r.k, _num(r.wasserstein), r.pauli_count, _num(r.energy_gm), _num(r.energy_expectation)] for r in records],
        ),
    )


def _manifest(config, status, code, errors, stages, inventory) -> dict:
    return {
        "artifact_version": artifact_version(),
        "config_hash": config.config_hash(),
        "config": config.to_dict(),
        "status": status,
        "exit_code": code,
        "errors": errors,
        "wall_clock_seconds": stages,
        "files": inventory,
    }


def cmd_run(config_path, overrides=None, output_dir=None) -> int:
    try:
        config = load_config(config_path, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_config(config, output_dir)


def run_config(config: RunConfig, output_dir=None) -> int:
    root = config.resolve_output(output_dir)
    w = _Writer(root)
    stages: dict[str, float] = {}
    errors: list[str] = []
    code = EXIT_OK

    t0 = time.perf_counter()
    problem = build_problem(config)
    stages["ground_state"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    references = reference_forms(problem)
    stages["reference"] = time.perf_counter() - t0

    cells = config.cells()
    failed = False
    try:
        for fidelity, shots in cells:
            name = cell_name(fidelity, shots)
            t0 = time.perf_counter()
            cell = run_cell(config, problem, fidelity, shots, references)
            stages[f"recursion[{name}]"] = time.perf_counter() - t0
            if cell.aborted is not None:
                code = EXIT_NEGATIVE_NORM
                errors.append(f"{name}: seed {cell.outputs[-1].seed_mode}: {cell.aborted}")
            t0 = time.perf_counter()
            write_cell(w, Path(".") if len(cells) == 1 else Path(name), config, problem, cell)
            stages[f"write[{name}]"] = time.perf_counter() - t0
    except Exception as exc:  # recorded, then reported as a generic failure
        failed = True
        code = EXIT_FAILURE
        errors.append(f"{type(exc).__name__}: {exc}")

    status = "error" if failed else ("ok" if code == EXIT_OK else "negative_norm")
    atomic_write(root / "manifest.json", _json_text(_manifest(config, status, code, errors, stages, w.inventory())))
    for line in errors:
        print(f"aborted: {line}", file=sys.stderr)
    return code


# oracle -------------------------------------------------------------------------


def cmd_oracle(config_path, overrides=None, output_dir=None) -> int:
    try:
        config = load_config(config_path, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if config.model.sites > MAX_SITES:
        print(f"oracle error: sites > {MAX_SITES}", file=sys.stderr)
        return EXIT_CONFIG
    problem = build_problem(config)
    references = reference_forms(problem)
    fidelities = sorted(set(REPORT_FIDELITIES) | {f for f in config.backend.fidelity if f < 1.0}, reverse=True)
    states = []
    for f in fidelities if mix_count(problem, config) >= 1 else ():
        s = prepare_state(problem, config, f)
        states.append(
            {
                "fidelity": f,
                "n_mix": mix_count(problem, config),
                "state_seed": config.backend.state_seed,
                "energy_expectation": float(expectation(s, problem.H).real),
                "overlap_check": s.fidelity(problem.ground),
            }
        )
    doc = {
        "config_hash": config.config_hash(),
        "ground_state_energy": problem.energy,
        "sector": list(problem.ground.sector),
        "lehmann": {f"{x},{y}": form.to_dict() for (x, y), form in sorted(references.items())},
        "approximate_states": states,
    }
    root = config.resolve_output(output_dir)
    atomic_write(root / "oracle.json", _json_text(doc))
    return EXIT_OK


# report -------------------------------------------------------------------------


def _read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _f(s: str) -> float:
    return float(s) if s != "" else float("nan")


def _verify_manifest(run_dir: Path, top: Path) -> list[str]:
    problems = []
    for base in (run_dir, top):
        mpath = base / "manifest.json"
        if not mpath.exists():
            continue
        manifest = json.loads(mpath.read_text())
        for entry in manifest.get("files", []):
            p = base / entry["path"]
            if p.parent.resolve() != run_dir.resolve():
                continue
            if not p.exists():
                problems.append(f"missing file {p}")
            elif sha256_file(p) != entry["sha256"]:
                problems.append(f"checksum mismatch for {p}")
        return problems
    return [f"no manifest covering {run_dir}"]


def cmd_report(output_dir) -> int:
    root = Path(output_dir)
    if not root.is_dir():
        print(f"report error: {root} is not a directory", file=sys.stderr)
        return EXIT_CONFIG
    runs = sorted(p.parent for p in root.rglob("convergence.csv"))
    if not runs:
        print(f"report error: no convergence.csv under {root}", file=sys.stderr)
        return EXIT_CONFIG

    fig2c, fig2d, fig3, fig1, summary, problems = [], [], [], [], [], []
    floors = []
    for run_dir in runs:
        name = run_dir.relative_to(root).as_posix() if run_dir != root else "."
        meta = json.loads((run_dir / "coefficients.json").read_text())
        problems += _verify_manifest(run_dir, root)
        fid, shots, e0 = meta["fidelity"], meta["shots"], meta["ground_state_energy"]
        rows = _read_csv(run_dir / "convergence.csv")
        ks = [int(r["k"]) for r in rows]
        d = [_f(r["d"]) for r in rows]
        p = [int(r["p"]) for r in rows]
        egm = [_f(r["E_gm"]) for r in rows]
        eex = [_f(r["E_expect"]) for r in rows]
        win = [i for i, k in enumerate(ks) if k % 2 == 0 and 2 <= k <= 14 and d[i] > 0]
        fit = line_fit([math.log(p[i]) for i in win], [math.log(d[i]) for i in win])
        for i, k in enumerate(ks):
            lead = [name, _num(fid), shots, k]
            fig2c.append(lead + [p[i]])
            fig2d.append(lead + [_num(d[i])])
            fig3.append(lead + [p[i], _num(d[i]), int(k % 2 == 0), _num(fit.slope), _num(fit.intercept), _num(fit.r_squared)])
            fig1.append(lead + [_num(egm[i]), _num(eex[i]), _num(e0)])

        lo, hi = SLOPE_RANGE
        ok = lo <= fit.slope <= hi
        summary.append(f"{'PASS' if ok else 'FAIL'} {name}: fig3 slope {fit.slope:.3f} in [{lo}, {hi}]")
        even = [i for i, k in enumerate(ks) if k in (2, 4, 6)]
        if even and abs(eex[0] - e0) > 1e-9 and all(math.isfinite(egm[i]) for i in even):
            better = all(abs(egm[i] - e0) < abs(eex[i] - e0) for i in even)
            errs = ", ".join(f"k={ks[i]}: {abs(egm[i] - e0):.4f}" for i in even)
            summary.append(
                f"{'PASS' if better else 'FAIL'} {name}: |E_GM - E0| ({errs}) below |<H> - E0| = {abs(eex[0] - e0):.4f}"
            )
        finite = [x for x in d if math.isfinite(x)]
        if shots == 0 and finite:
            floors.append((fid, finite[-1], name))

    if len({f for f, _, _ in floors}) > 1:
        floors.sort(key=lambda t: -t[0])
        ordered = all(a[1] <= b[1] for a, b in zip(floors, floors[1:]))
        desc = ", ".join(f"F={f:g}: {x:.3e}" for f, x, _ in floors)
        summary.append(f"{'PASS' if ordered else 'FAIL'} distance floors ordered inversely with fidelity ({desc})")
    for msg in problems:
        summary.append(f"FAIL manifest: {msg}")

    lead = ["run", "fidelity", "shots", "k"]
    atomic_write(root / "fig2c.csv", _csv_text(lead + ["p"], fig2c))
    atomic_write(root / "fig2d.csv", _csv_text(lead + ["d"], fig2d))
    atomic_write(root / "fig3.csv", _csv_text(lead + ["p", "d", "even", "slope", "intercept", "r_squared"], fig3))
    atomic_write(root / "fig1_energy.csv", _csv_text(lead + ["E_gm", "E_expect", "E0"], fig1))
    atomic_write(root / "summary.txt", "\n".join(summary) + "\n")
    print("\n".join(summary))
    return EXIT_FAILURE if problems else EXIT_OK


__all__ = [
    "EXIT_CONFIG",
    "EXIT_FAILURE",
    "EXIT_NEGATIVE_NORM",
    "EXIT_OK",
    "cmd_oracle",
    "cmd_report",
    "cmd_run",
    "run_config",
    "run_cell",
    "build_problem",
]
