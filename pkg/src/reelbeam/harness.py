"""Seeded Monte-Carlo sweeps over the named scenarios, plus metrics and CSV output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import baselines
from .errors import InvalidInputError, ReelBeamError, SdpInfeasibleError, SdpNumericalError
from .model import SCENARIO_KINDS, build_original_sdp, build_scenario, steering_vector
from .reelbf import run_algorithm1
from .sdp import Status, solve

logger = logging.getLogger(__name__)

SCHEMES = ("ReelBf", "RankOne", "Alamouti2", "Ostbc4")
CSV_HEADER = ("sweep_name", "sweep_value", "run_index", "scheme", "feasible", "power_db", "ranks",
              "sum_rank_sq", "wall_time_ms")

DESK_N_T = 8
DESK_MAX_L = 40
DESK_MAX_RUNS = 10


@dataclass
class Scenario:
    kind: str
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise InvalidInputError(f"unknown scenario kind {self.kind!r}; expected one of {SCENARIO_KINDS}")
        for key, val in self.params.items():
            if key.endswith("_deg") or key.endswith("angles_deg"):
                vals = np.atleast_1d(np.asarray(val, dtype=float))
                if np.any(np.abs(vals) > 90.0):
                    raise InvalidInputError(f"{key}: angles must lie in [-90, 90] degrees")


@dataclass
class ExperimentConfig:
    scenario: Scenario
    sweep_name: str
    sweep_values: list
    n_monte_carlo: int = 1
    n_randomizations: int = 100
    base_seed: int = 0
    schemes: tuple = SCHEMES
    record_timing: bool = False
    reduce_rank: bool = True

    def validate(self) -> None:
        self.scenario.validate()
        if not self.sweep_values:
            raise InvalidInputError("sweep value list is empty")
        if self.n_monte_carlo < 1 or self.n_randomizations < 1:
            raise InvalidInputError("run and randomization counts must be at least 1")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise InvalidInputError(f"unknown scheme(s) {bad}; expected a subset of {SCHEMES}")

    def to_json(self) -> dict:
        d = asdict(self)
        d["schemes"] = list(self.schemes)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        try:
            sc = d["scenario"]
            cfg = cls(
                scenario=Scenario(sc["kind"], dict(sc.get("params", {}))),
                sweep_name=str(d["sweep_name"]),
                sweep_values=list(d["sweep_values"]),
                n_monte_carlo=int(d.get("n_monte_carlo", 1)),
                n_randomizations=int(d.get("n_randomizations", 100)),
                base_seed=int(d.get("base_seed", 0)),
                schemes=tuple(d.get("schemes", SCHEMES)),
                record_timing=bool(d.get("record_timing", False)),
                reduce_rank=bool(d.get("reduce_rank", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed experiment config: {exc}") from exc
        cfg.validate()
        return cfg


@dataclass
class ExperimentRecord:
    sweep_name: str
    sweep_value: float
    run_index: int
    scheme: str
    feasible: bool
    power_db: float | None
    ranks: list[int]
    wall_time_ms: float | None = None
    status: str = "ok"
    seed: int = 0
    sdp_bound_db: float | None = None

    @property
    def sum_rank_sq(self) -> int:
        return int(sum(r * r for r in self.ranks))


def desk_scale(cfg: ExperimentConfig) -> ExperimentConfig:
    """Shrink a config for quick runs: fewer antennas, L ≤ 40 and at most 10 runs.

    Only the energy-harvesting scenarios get a smaller array; the
    interference scenarios carry more nulls and caps than eight antennas
    can satisfy.
    """
    params = dict(cfg.scenario.params)
    if cfg.scenario.kind in ("LosEh", "RayleighEh"):
        params["n_t"] = min(int(params.get("n_t", DESK_N_T)), DESK_N_T)
    values = list(cfg.sweep_values)
    if cfg.sweep_name == "L":
        values = [v for v in values if v <= DESK_MAX_L] or [min(values)]
    if "L" in params:
        params["L"] = min(int(params["L"]), DESK_MAX_L)
    return ExperimentConfig(Scenario(cfg.scenario.kind, params), cfg.sweep_name, values,
                            min(cfg.n_monte_carlo, DESK_MAX_RUNS), cfg.n_randomizations, cfg.base_seed,
                            tuple(cfg.schemes), cfg.record_timing, cfg.reduce_rank)


def _db(x: float | None) -> float | None:
    return None if x is None else 10.0 * math.log10(x)


def _sweep_params(cfg: ExperimentConfig, value) -> dict:
    params = dict(cfg.scenario.params)
    if cfg.sweep_name == "L":
        value = int(value)
    params[cfg.sweep_name] = value
    return params


def run_single(cfg: ExperimentConfig, value, run_index: int) -> list[ExperimentRecord]:
    """All schemes for one sweep value and one Monte-Carlo run."""
    seed = cfg.base_seed + run_index
    params = _sweep_params(cfg, value)
    base = dict(sweep_name=cfg.sweep_name, sweep_value=value, run_index=run_index, seed=seed)
    clock = time.perf_counter
    out = []

    def stamp(t0):
        return (clock() - t0) * 1e3 if cfg.record_timing else None

    try:
        p = build_scenario(cfg.scenario.kind, params, seed=seed)
        p.validate()
    except ReelBeamError as exc:
        return [ExperimentRecord(scheme=s, feasible=False, power_db=None, ranks=[],
                                 status=f"error:{type(exc).__name__}", **base) for s in cfg.schemes]

    cache: dict = {}
    t0 = clock()
    raw = solve(build_original_sdp(p))
    cache[baselines.target_key(p.sinr_targets)] = raw
    bound_db = _db(raw.objective_value) if raw.status is Status.OPTIMAL else None
    solve_ms = stamp(t0)

    if "ReelBf" in cfg.schemes:
        t0 = clock()
        try:
            sol = run_algorithm1(p, reduce_rank=cfg.reduce_rank, sdp_solution=raw)
            out.append(ExperimentRecord(scheme="ReelBf", feasible=True, power_db=_db(sol.power),
                                        ranks=list(sol.profile.ranks), sdp_bound_db=bound_db, **base))
        except SdpInfeasibleError:
            out.append(ExperimentRecord(scheme="ReelBf", feasible=False, power_db=None, ranks=[],
                                        status="infeasible", **base))
        except SdpNumericalError:
            out.append(ExperimentRecord(scheme="ReelBf", feasible=False, power_db=None, ranks=[],
                                        status="numerical", **base))
        except ReelBeamError as exc:
            logger.warning("run %d at %s=%s: %s", run_index, cfg.sweep_name, value, exc)
            out.append(ExperimentRecord(scheme="ReelBf", feasible=False, power_db=None, ranks=[],
                                        status=f"error:{type(exc).__name__}", **base))
        if cfg.record_timing:
            out[-1].wall_time_ms = solve_ms + stamp(t0)

    wanted = [s for s in cfg.schemes if s != "ReelBf"]
    if wanted:
        r_bits = value if cfg.sweep_name == "rate" else params.get("rate")
        for s in wanted:
            t0 = clock()
            try:
                res = baselines.evaluate_baselines(p, r_bits=r_bits, n_inst=cfg.n_randomizations, seed=seed,
                                                   schemes=(s,), solutions=cache)[0]
                rec = ExperimentRecord(scheme=s, feasible=res.feasible, power_db=_db(res.power),
                                       ranks=list(res.ranks), sdp_bound_db=_db(res.sdp_bound),
                                       status="ok" if res.sdp_bound is not None else "sdp-infeasible", **base)
            except ReelBeamError as exc:
                rec = ExperimentRecord(scheme=s, feasible=False, power_db=None, ranks=[],
                                       status=f"error:{type(exc).__name__}", **base)
            if cfg.record_timing:
                rec.wall_time_ms = stamp(t0)
            out.append(rec)
    return out


def _run_task(args):
    cfg, value, i = args
    return run_single(cfg, value, i)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[ExperimentRecord]:
    """Run every (sweep value, run) pair; output order does not depend on ``jobs``."""
    cfg.validate()
    tasks = [(cfg, v, i) for v in cfg.sweep_values for i in range(cfg.n_monte_carlo)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_task, tasks))
    else:
        chunks = [_run_task(t) for t in tasks]
    return [rec for chunk in chunks for rec in chunk]


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def beampattern(beamformers, grid_deg, n_t: int | None = None) -> np.ndarray:
    """Radiated power ``Σ_m ‖h(θ)ᴴ W_m‖²`` on a grid of directions in degrees."""
    grid = np.atleast_1d(np.asarray(grid_deg, dtype=float))
    if np.any(np.abs(grid) > 90.0):
        raise InvalidInputError("beampattern grid must lie within [-90, 90] degrees")
    beams = [np.asarray(w, dtype=complex).reshape(np.shape(w)[0], -1) for w in beamformers]
    n = beams[0].shape[0] if n_t is None else n_t
    if any(w.shape[0] != n for w in beams):
        raise InvalidInputError("beamformer height does not match the array size")
    stacked = np.hstack(beams)
    steer = np.array([steering_vector(t, n) for t in grid])
    return np.sum(np.abs(np.conj(steer) @ stacked) ** 2, axis=1)


def feasibility_percentage(records, scheme: str, sweep_value) -> float | None:
    """Fraction of runs that were feasible, or ``None`` when nothing matches."""
    sel = [r for r in records if r.scheme == scheme and r.sweep_value == sweep_value]
    if not sel:
        return None
    return sum(r.feasible for r in sel) / len(sel)


def rank_distribution(records, scheme: str = "ReelBf") -> dict:
    """``{sweep_value: [{rank: percent}, ...per user]}`` over records that carry ranks."""
    grouped: dict = {}
    for r in records:
        if r.scheme == scheme and r.ranks:
            grouped.setdefault(r.sweep_value, []).append(r.ranks)
    out = {}
    for value, runs in grouped.items():
        n_users = max(len(x) for x in runs)
        table = []
        for m in range(n_users):
            col = [x[m] for x in runs if len(x) > m]
            counts: dict = {}
            for k in col:
                counts[k] = counts.get(k, 0) + 1
            table.append({k: 100.0 * c / len(col) for k, c in sorted(counts.items())})
        out[value] = table
    return out


def check_records(records, rel_tol: float = 1e-6, slack_db: float = 0.01) -> list[str]:
    """Cross-scheme sanity checks; returns human-readable problems."""
    problems = []
    by_run: dict = {}
    for r in records:
        by_run.setdefault((r.sweep_value, r.run_index), {})[r.scheme] = r
    for key, runs in by_run.items():
        reel = runs.get("ReelBf")
        if reel is None or not reel.feasible:
            continue
        if reel.sdp_bound_db is not None and abs(10 ** ((reel.power_db - reel.sdp_bound_db) / 10) - 1) > rel_tol:
            problems.append(f"{key}: ReelBf power differs from the SDP bound")
        for s, r in runs.items():
            if s != "ReelBf" and r.feasible and r.power_db < reel.power_db - slack_db:
                problems.append(f"{key}: {s} power below ReelBf")
    return problems


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.sweep_name, _fmt(r.sweep_value), r.run_index, r.scheme, _fmt(r.feasible),
                    _fmt(r.power_db), ";".join(str(k) for k in r.ranks), r.sum_rank_sq, _fmt(r.wall_time_ms)])
    return buf.getvalue()


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(records_to_csv(records))


def read_records_csv(path) -> list[ExperimentRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(ExperimentRecord(
                sweep_name=row["sweep_name"], sweep_value=float(row["sweep_value"]),
                run_index=int(row["run_index"]), scheme=row["scheme"], feasible=row["feasible"] == "true",
                power_db=float(row["power_db"]) if row["power_db"] else None,
                ranks=[int(k) for k in row["ranks"].split(";")] if row["ranks"] else [],
                wall_time_ms=float(row["wall_time_ms"]) if row["wall_time_ms"] else None,
            ))
    return out


def write_config_json(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_rank_table_csv(records, path, scheme: str = "ReelBf") -> None:
    """Long-format rank distribution: sweep_value, user, rank, percent."""
    dist = rank_distribution(records, scheme)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep_value", "user", "rank", "percent"])
        for value in sorted(dist):
            for m, table in enumerate(dist[value]):
                for k, pct in table.items():
                    w.writerow([_fmt(value), m, k, format(pct, ".4f")])
