"""Batch driver: configured evolutions, hbar sweeps, inequality ensembles.

The harness is the file-producing layer: it validates a JSON run
configuration, builds initial states, evolves them while sampling the
observable battery, and writes CSV / JSON-lines outputs with full
provenance (config hash, versions, timestamps).  Reruns with the same
config and seed reproduce outputs bitwise at one thread.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import DriftAlarm, PropagatorConfig, evolve, hf_energy
from .grid import TorusGrid
from .interaction import InteractionKernel
from .observables import (
    ObservableRecord,
    lp_pm_eps,
    moment,
    schatten_lp,
    sobolev_norm,
    weighted_schatten,
)
from .state import (
    MixedState,
    coherent_state_lattice,
    new_mixed_state,
    random_mixed_state,
    save_state,
)
from .inequalities import (
    check_kinetic_interpolation,
    check_merged_interpolation,
    check_weighted_schatten_moment,
    commutator_trace_V,
    commutator_trace_X,
)

__all__ = ["ConfigError", "RunConfig", "run_evolve", "run_sweep", "run_ensemble", "run_oracle"]


class ConfigError(ValueError):
    """Invalid run configuration (maps to exit code 3)."""


class CorrectnessAlarm(RuntimeError):
    """A two-path identity failed inside an ensemble (exit code 4)."""


KNOWN_CHECKS = (
    "kinetic_interpolation",
    "merged_interpolation",
    "weighted_schatten_moment",
    "commutator_trace_V",
    "commutator_trace_X",
    # dense-oracle battery ids (only meaningful for the oracle command)
    "singular_values",
    "propagation",
)


@dataclass
class RunConfig:
    grid_n: int = 16
    grid_length: float = 2 * np.pi
    a: float = 0.3
    sign: int = -1
    hbar: list[float] = field(default_factory=lambda: [1.0])
    mode: str = "hartree"
    state_kind: str = "coherent"  # coherent | random | plane_waves
    rank: int = 4
    seed: int = 0
    sigma: float | None = None
    decay: float = 2.0
    T: float = 1.0
    dt: float = 2e-3
    cadence: int = 25
    corrector_iterations: int = 1
    moments: list[int] = field(default_factory=lambda: [0, 2, 4])
    sobolev_n: int = 2
    sobolev_q: float = 2.0
    track_sobolev: bool = False
    eps: float = 0.5
    delta: float = 0.5
    check_ids: list[str] = field(default_factory=list)
    ensemble_size: int = 50
    check_n: int = 2
    check_k: int = 0
    check_p: float = 2.0

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.grid_n < 4 or self.grid_n % 2:
            raise ConfigError(f"grid_n must be even and >= 4, got {self.grid_n}")
        if not 0 < self.a < 2:
            raise ConfigError(f"a must lie in (0, 2), got {self.a}")
        if self.sign not in (1, -1):
            raise ConfigError("sign must be +1 or -1")
        if not self.hbar or any(hb <= 0 for hb in self.hbar):
            raise ConfigError("hbar list must be nonempty and positive")
        if self.mode not in ("hartree", "hartree_fock"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.state_kind not in ("coherent", "random", "plane_waves"):
            raise ConfigError(f"unknown state kind {self.state_kind!r}")
        if self.T < 0 or self.dt <= 0 or self.cadence < 1:
            raise ConfigError("time parameters invalid")
        if any(n % 2 for n in self.moments):
            raise ConfigError("moment orders must be even")
        for cid in self.check_ids:
            if cid not in KNOWN_CHECKS:
                raise ConfigError(f"unknown check id {cid!r}")

    def admissibility(self) -> dict:
        """Which theorem ranges this exponent falls in (stamped into outputs)."""
        return {
            "a": self.a,
            "regularity_range": self.a < 0.5,
            "moment_range": self.a <= 0.8,
        }

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def default_centers(rank: int, length: float) -> list:
    """Coherent-state centers on a small lattice near the origin."""
    offsets = [
        np.array([i - (rank - 1) / 2, 0.0, 0.0]) * (length / (2 * max(rank, 2)))
        for i in range(rank)
    ]
    velocities = [
        np.array([0.5 * (-1) ** i, 0.25 * (i % 3 - 1), 0.0]) for i in range(rank)
    ]
    return list(zip(offsets, velocities))


def plane_wave_state(hbar: float, grid: TorusGrid, rank: int) -> MixedState:
    """Equal-weight mixture of the lowest distinct plane-wave modes."""
    modes = sorted(
        ((m1, m2, m3) for m1 in range(-2, 3) for m2 in range(-2, 3) for m3 in range(-2, 3)),
        key=lambda m: (m[0] ** 2 + m[1] ** 2 + m[2] ** 2, m),
    )[:rank]
    mesh = grid.coordinate_mesh()
    scale = 2 * np.pi / grid.length
    orbitals = np.stack(
        [
            np.exp(1j * scale * (m[0] * mesh[0] + m[1] * mesh[1] + m[2] * mesh[2]))
            / grid.length**1.5
            for m in modes
        ]
    )
    return new_mixed_state(hbar, grid, np.ones(rank), orbitals)


def build_state(config: RunConfig, hbar: float, seed: int | None = None) -> MixedState:
    grid = TorusGrid(config.grid_n, config.grid_length)
    if config.state_kind == "coherent":
        return coherent_state_lattice(
            hbar, grid, default_centers(config.rank, grid.length), config.sigma
        )
    if config.state_kind == "random":
        return random_mixed_state(
            config.seed if seed is None else seed, hbar, grid, config.rank, config.decay
        )
    return plane_wave_state(hbar, grid, config.rank)


def build_kernel(config: RunConfig, grid: TorusGrid) -> InteractionKernel:
    return InteractionKernel(config.a, config.sign, grid)


def observable_columns(config: RunConfig) -> list[str]:
    cols = [f"M_{n}" for n in config.moments]
    cols += ["Lp_inf", f"Lpm_m{config.sobolev_n}"]
    if config.track_sobolev:
        cols += [
            f"W12_m{config.sobolev_n}",
            f"W1q_m{config.sobolev_n}",
        ]
    cols += ["energy", "trace_err", "gram_err"]
    return cols


def make_observer(config: RunConfig, kernel: InteractionKernel):
    r = 3 / (1 - config.a) if config.a < 1 else 6.0
    n1 = config.sobolev_n + config.a + 1 + config.delta

    def observer(t: float, state: MixedState) -> ObservableRecord:
        values = {f"M_{n}": moment(state, n) for n in config.moments}
        values["Lp_inf"] = schatten_lp(state, np.inf)
        values[f"Lpm_m{config.sobolev_n}"] = lp_pm_eps(state, n1, r, config.eps)
        if config.track_sobolev:
            values[f"W12_m{config.sobolev_n}"] = sobolev_norm(
                state, config.sobolev_n, 2
            )
            values[f"W1q_m{config.sobolev_n}"] = sobolev_norm(
                state, config.sobolev_n, config.sobolev_q
            )
        values["energy"] = hf_energy(kernel, state, config.mode)
        values["trace_err"] = abs(state.h**3 * float(np.sum(state.weights)) - 1.0)
        values["gram_err"] = state.gram_error()
        return ObservableRecord(t, values)

    return observer


def _write_manifest(out: Path, config: RunConfig, started: float, threads: int):
    manifest = {
        "config": asdict(config),
        "config_hash": config.config_hash(),
        "admissibility": config.admissibility(),
        "version": __version__,
        "numpy_version": np.__version__,
        "started_unix": started,
        "finished_unix": _time.time(),
        "wall_seconds": _time.time() - started,
        "threads": threads,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _write_timeseries(path: Path, records: list[ObservableRecord], columns: list[str]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + columns)
        for rec in records:
            writer.writerow([repr(v) for v in rec.row(columns)])


def run_evolve(config: RunConfig, out_dir, threads: int = 1) -> int:
    """Single evolution at the first configured hbar; writes timeseries.csv,
    a final-state snapshot, and manifest.json."""
    started = _time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hbar = config.hbar[0]
    state = build_state(config, hbar)
    kernel = build_kernel(config, state.grid)
    prop = PropagatorConfig(
        mode=config.mode, dt=config.dt, corrector_iterations=config.corrector_iterations
    )
    observer = make_observer(config, kernel)
    try:
        final, records = evolve(
            kernel, state, config.T, prop, observer, cadence=config.cadence
        )
    except DriftAlarm as exc:
        (out / "drift_alarm.txt").write_text(str(exc))
        _write_manifest(out, config, started, threads)
        return 2
    _write_timeseries(out / "timeseries.csv", records, observable_columns(config))
    save_state(out / "final_state.schf", final)
    _write_manifest(out, config, started, threads)
    return 0


def run_sweep(config: RunConfig, out_dir, threads: int = 1) -> int:
    """Per-hbar subruns plus a summary of max-over-hbar and spread per column."""
    if len(config.hbar) < 2:
        raise ConfigError("sweep requires at least two hbar values")
    started = _time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    columns = observable_columns(config)

    def one(hbar: float):
        state = build_state(config, hbar)
        kernel = build_kernel(config, state.grid)
        prop = PropagatorConfig(
            mode=config.mode,
            dt=config.dt,
            corrector_iterations=config.corrector_iterations,
        )
        observer = make_observer(config, kernel)
        _, records = evolve(
            kernel, state, config.T, prop, observer, cadence=config.cadence
        )
        return records

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, config.hbar))
    else:
        results = [one(hb) for hb in config.hbar]

    for hbar, records in zip(config.hbar, results):
        sub = out / f"hbar_{hbar:g}"
        sub.mkdir(exist_ok=True)
        _write_timeseries(sub / "timeseries.csv", records, columns)

    with open(out / "sweep_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "quantity", "max_over_hbar", "min_over_hbar", "spread"])
        for i, rec0 in enumerate(results[0]):
            for col in columns:
                vals = [res[i].values[col] for res in results]
                hi, lo = max(vals), min(vals)
                spread = (hi - lo) / abs(hi) if hi != 0 else 0.0
                writer.writerow([repr(rec0.time), col, repr(hi), repr(lo), repr(spread)])
    _write_manifest(out, config, started, threads)
    return 0


def _run_checks(config: RunConfig, kernel: InteractionKernel, state, seed):
    reports = []
    for cid in config.check_ids:
        if cid == "kinetic_interpolation":
            reports.append(
                check_kinetic_interpolation(state, config.check_n, config.check_k, seed)
            )
        elif cid == "merged_interpolation":
            reports.append(
                check_merged_interpolation(
                    state, max(config.check_n, 4), config.check_k, config.check_p, seed
                )
            )
        elif cid == "weighted_schatten_moment":
            reports.append(
                check_weighted_schatten_moment(state, config.check_n, config.check_p, seed)
            )
        elif cid == "commutator_trace_V":
            reports.append(commutator_trace_V(kernel, state, config.check_n, 0, seed))
        elif cid == "commutator_trace_X":
            try:
                _, rep = commutator_trace_X(kernel, state, config.check_n, 0, seed=seed)
            except AssertionError as exc:
                raise CorrectnessAlarm(str(exc)) from exc
            reports.append(rep)
    return reports


def run_ensemble(config: RunConfig, out_dir, threads: int = 1) -> int:
    """Inequality reports over an ensemble of seeded random states."""
    if config.ensemble_size < 1:
        raise ConfigError("ensemble size must be >= 1")
    if not config.check_ids:
        raise ConfigError("no inequality check ids configured")
    started = _time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    jobs = [
        (hbar, config.seed + i)
        for hbar in config.hbar
        for i in range(config.ensemble_size)
    ]

    def one(job):
        hbar, seed = job
        state = build_state(config, hbar, seed=seed)
        kernel = build_kernel(config, state.grid)
        return _run_checks(config, kernel, state, seed)

    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                all_reports = list(pool.map(one, jobs))
        else:
            all_reports = [one(job) for job in jobs]
    except CorrectnessAlarm as exc:
        (out / "correctness_alarm.txt").write_text(str(exc))
        _write_manifest(out, config, started, threads)
        return 4

    flat = [rep for reports in all_reports for rep in reports]
    with open(out / "reports.jsonl", "w") as fh:
        for rep in flat:
            fh.write(rep.to_json() + "\n")

    with open(out / "aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "hbar", "count", "max_ratio", "median_ratio"])
        for cid in config.check_ids:
            for hbar in config.hbar:
                ratios = [
                    r.ratio for r in flat if r.id == cid and r.hbar == hbar
                ]
                if ratios:
                    writer.writerow(
                        [cid, repr(hbar), len(ratios),
                         repr(max(ratios)), repr(float(np.median(ratios)))]
                    )
    _write_manifest(out, config, started, threads)
    return 0


def run_oracle(config: RunConfig, out_dir, threads: int = 1) -> int:
    """Dense-oracle cross-validation suite on an N <= 8 grid."""
    from . import dense
    from .observables import low_rank_singular_values
    from .state import spatial_density  # noqa: F401  (battery uses the state API)

    started = _time.time()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config.grid_n > dense.MAX_N:
        raise ConfigError(f"oracle grid must have N <= {dense.MAX_N}")
    if not config.check_ids:
        raise ConfigError("oracle run needs a nonempty check list")

    grid = TorusGrid(config.grid_n, config.grid_length)
    kernel = build_kernel(config, grid)
    worst: dict[str, float] = {}

    for cid in config.check_ids:
        if cid == "singular_values":
            errs = []
            for seed in range(10):
                state = random_mixed_state(config.seed + seed, 1.0, grid, config.rank)
                from .observables import state_operator

                op = state_operator(state)
                s_lr = low_rank_singular_values(op)
                s_dn = np.linalg.svd(dense.dense_from_factors(op), compute_uv=False)
                s_dn = s_dn[: len(s_lr)]
                errs.append(
                    float(np.max(np.abs(s_lr - s_dn)) / max(s_dn[0], 1e-300))
                )
            worst[cid] = max(errs)
        elif cid == "propagation":
            from .dynamics import PropagatorConfig, evolve

            state = random_mixed_state(config.seed, 1.0, grid, 2)
            prop = PropagatorConfig(mode=config.mode, dt=config.dt)
            final, _ = evolve(kernel, state, config.T, prop)
            g0 = dense.densify(state)
            g_dense = dense.dense_evolve_rk4(
                kernel, g0, 1.0, config.T, config.dt, config.mode
            )
            g_lr = dense.densify(final)
            worst[cid] = float(
                np.linalg.norm(g_lr - g_dense) / np.linalg.norm(g0)
            )
        else:
            raise ConfigError(f"unknown oracle check {cid!r}")

    tolerances = {"singular_values": 1e-9, "propagation": 1e-5}
    passed = all(worst[cid] <= tolerances[cid] for cid in worst)
    report = {
        "worst_case": worst,
        "tolerances": {k: tolerances[k] for k in worst},
        "passed": passed,
    }
    (out / "oracle_report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    _write_manifest(out, config, started, threads)
    return 0 if passed else 5
