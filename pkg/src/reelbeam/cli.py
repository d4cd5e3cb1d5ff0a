"""Command line front end: ``reelbeam {design,sweep,beampattern,validate}``.

Exit codes: 0 ok, 1 validation failed, 2 infeasible, 3 numerical trouble,
64 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import harness
from .errors import InvalidInputError, ReelBeamError, SdpInfeasibleError, SdpNumericalError
from .model import BeamformingProblem, build_scenario, problem_from_json
from .reelbf import run_algorithm1, solution_from_json, solution_to_json

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

log = logging.getLogger("reelbeam")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` overrides; ``scenario.X`` is shorthand for ``scenario.params.X``."""
    for item in overrides or ():
        if "=" not in item:
            raise UsageError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise UsageError(f"override {item!r} has an empty key")
        if len(parts) == 2 and parts[0] == "scenario" and parts[1] not in ("kind", "params"):
            parts = ["scenario", "params", parts[1]]
        node = doc
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise UsageError(f"override {item!r}: {p} is not an object")
            node = nxt
        node[parts[-1]] = _parse_value(raw)
    return doc


def load_config(path, overrides=()) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    return apply_overrides(doc, overrides)


def _env_seed(default):
    env = os.environ.get("REELBEAM_SEED")
    if env is None or env == "":
        return default
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"REELBEAM_SEED must be an integer, got {env!r}") from exc


def problem_from_config(doc: dict) -> BeamformingProblem:
    """A design config holds either ``problem`` (explicit data) or ``scenario`` plus ``seed``."""
    try:
        if "problem" in doc:
            p = problem_from_json(doc["problem"])
        elif "scenario" in doc:
            sc = doc["scenario"]
            harness.Scenario(sc["kind"], dict(sc.get("params", {}))).validate()
            p = build_scenario(sc["kind"], dict(sc.get("params", {})), seed=_env_seed(doc.get("seed", 0)))
        else:
            raise UsageError("config needs a 'problem' or a 'scenario' entry")
        p.validate()
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed config: {exc}") from exc
    return p


# ---------------------------------------------------------------------------
# design
# ---------------------------------------------------------------------------

def _report(sol, p: BeamformingProblem, checks: dict) -> str:
    lines = [
        f"users M={p.M}  shaping rows L={p.L}  individual groups P={p.P}  antennas N_t={p.n_t}",
        f"K = {sol.K}",
        "R_m = " + ", ".join(str(u.R) for u in sol.users),
        f"power      = {sol.power:.12g} ({10 * math.log10(sol.power):.6f} dB)",
        f"sdp_bound  = {sol.sdp_bound:.12g} ({10 * math.log10(sol.sdp_bound):.6f} dB)",
        f"rel. gap   = {abs(sol.power - sol.sdp_bound) / sol.sdp_bound:.3e}",
    ]
    if sol.profile is not None:
        pr = sol.profile
        lines.append(f"rank profile = {pr.ranks}  sum_sq = {pr.sum_sq} <= {pr.bound}  "
                     f"certified_lemma5 = {pr.certified_lemma5}")
    for k, v in checks.items():
        lines.append(f"{k:<28s} {v:.3e}")
    return "\n".join(lines) + "\n"


def _solution_checks(p: BeamformingProblem, beams) -> dict:
    rep = independent_check(p, beams)
    return {"max SINR shortfall": rep["sinr_shortfall"],
            "max joint row violation": rep["joint_violation"],
            "max individual violation": rep["individual_violation"],
            "orthogonality residual": rep["orthogonality"]}


def cmd_design(args) -> int:
    doc = load_config(args.config, args.set)
    p = problem_from_config(doc)
    opts = doc.get("design", {}) if isinstance(doc.get("design", {}), dict) else {}
    try:
        sol = run_algorithm1(p, reduce_rank=bool(opts.get("reduce_rank", True)),
                             exhaustive=bool(opts.get("exhaustive", False)), K=opts.get("K"))
    except SdpInfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SdpNumericalError as exc:
        print(f"numerical trouble: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "solution.json", "w", encoding="utf-8") as fh:
        json.dump(solution_to_json(sol), fh)
        fh.write("\n")
    (out / "report.txt").write_text(_report(sol, p, _solution_checks(p, sol.beamformers)), encoding="utf-8")
    print(f"power {sol.power:.10g} (sdp bound {sol.sdp_bound:.10g}), K={sol.K}; wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def cmd_sweep(args) -> int:
    doc = load_config(args.config, args.set)
    try:
        cfg = harness.ExperimentConfig.from_json(doc)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    cfg.base_seed = _env_seed(cfg.base_seed)
    if args.desk_scale:
        cfg = harness.desk_scale(cfg)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    records = harness.run_experiment(cfg, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    harness.write_records_csv(records, out / "records.csv")
    harness.write_config_json(cfg, out / "config.json")
    harness.write_rank_table_csv(records, out / "ranks.csv")
    for v in cfg.sweep_values:
        parts = []
        for s in cfg.schemes:
            f = harness.feasibility_percentage(records, s, v)
            parts.append(f"{s} {100 * f:.0f}%" if f is not None else f"{s} n/a")
        print(f"{cfg.sweep_name}={v}: " + ", ".join(parts))
    return EXIT_OK


# ---------------------------------------------------------------------------
# beampattern
# ---------------------------------------------------------------------------

def parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"grid {text!r} must be start:stop:step") from exc
    if step <= 0 or stop < start:
        raise UsageError("grid needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _load_solution(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return solution_from_json(json.load(fh))
    except OSError as exc:
        raise UsageError(f"cannot read solution {path}: {exc}") from exc
    except (json.JSONDecodeError, InvalidInputError) as exc:
        raise UsageError(f"solution {path} is malformed: {exc}") from exc


def cmd_beampattern(args) -> int:
    sol = _load_solution(args.solution)
    grid = parse_grid(args.grid_deg)
    try:
        vals = harness.beampattern(sol.beamformers, grid)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    lines = ["theta_deg,power"] + [f"{t:.6g},{v:.12g}" for t, v in zip(grid, vals)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def _quad(w, a) -> float:
    """``tr(Wᴴ A W)`` for one user's beamforming matrix."""
    return float(np.real(np.trace(np.conj(w).T @ a @ w)))


def independent_check(p: BeamformingProblem, beams) -> dict:
    """Recompute every constraint of ``p`` directly from the beamformers."""
    beams = [np.asarray(w, dtype=complex) for w in beams]
    sinr_gap = 0.0
    for m, h in enumerate(p.channels):
        h = np.asarray(h, dtype=complex).reshape(-1)
        rx = [float(np.sum(np.abs(np.conj(h) @ w) ** 2)) for w in beams]
        sinr = rx[m] / (sum(rx) - rx[m] + p.noise_vars[m])
        sinr_gap = max(sinr_gap, (p.sinr_targets[m] - sinr) / p.sinr_targets[m])
    joint = 0.0
    for row in p.joint:
        v = sum(_quad(w, np.asarray(a, dtype=complex)) for w, a in zip(beams, row.matrices))
        tau = row.threshold
        if row.sense == "GE":
            err = tau - v
        elif row.sense == "LE":
            err = v - tau
        else:
            err = abs(v - tau)
        joint = max(joint, err / (1.0 + abs(tau)))
    indiv = 0.0
    for group in p.individual:
        for m, e in enumerate(group):
            v = _quad(beams[m], np.asarray(e.matrix, dtype=complex))
            for err, b in ((e.lower - v, e.lower), (v - e.upper, e.upper)):
                if math.isfinite(b):
                    indiv = max(indiv, err / (1.0 + abs(b)))
    ortho = 0.0
    for w, h in zip(beams, p.channels):
        h = np.asarray(h, dtype=complex).reshape(-1)
        for k in range(1, w.shape[1]):
            nrm = np.linalg.norm(w[:, k])
            if nrm > 0:
                ortho = max(ortho, abs(np.vdot(h, w[:, k])) / (np.linalg.norm(h) * nrm))
    return {"sinr_shortfall": max(sinr_gap, 0.0), "joint_violation": max(joint, 0.0),
            "individual_violation": max(indiv, 0.0), "orthogonality": ortho,
            "power": float(sum(np.sum(np.abs(w) ** 2) for w in beams))}


def validate_solution(sol, p: BeamformingProblem, feas_tol: float = 1e-6, ortho_tol: float = 1e-8,
                      tight_tol: float = 1e-6) -> list[str]:
    problems = []
    beams = sol.beamformers
    if len(beams) != p.M:
        return [f"solution has {len(beams)} users, problem has {p.M}"]
    for m, w in enumerate(beams):
        if w.ndim != 2 or w.shape[0] != p.n_t:
            return [f"user {m}: beamformer shape {w.shape} does not match N_t = {p.n_t}"]
        if w.shape[1] != sol.K:
            problems.append(f"user {m}: {w.shape[1]} columns but K = {sol.K}")
    rep = independent_check(p, beams)
    if rep["sinr_shortfall"] > feas_tol:
        problems.append(f"SINR below target by {rep['sinr_shortfall']:.3e} (relative)")
    if rep["joint_violation"] > feas_tol:
        problems.append(f"joint shaping rows violated by {rep['joint_violation']:.3e}")
    if rep["individual_violation"] > feas_tol:
        problems.append(f"individual shaping rows violated by {rep['individual_violation']:.3e}")
    if rep["orthogonality"] > ortho_tol:
        problems.append(f"shaping beams not orthogonal to the user's channel ({rep['orthogonality']:.3e})")
    if abs(rep["power"] - sol.power) > tight_tol * max(sol.power, 1e-300):
        problems.append(f"stored power {sol.power:.10g} differs from recomputed {rep['power']:.10g}")
    if math.isfinite(sol.sdp_bound) and abs(rep["power"] - sol.sdp_bound) > tight_tol * sol.sdp_bound:
        problems.append(f"power {rep['power']:.10g} is not tight to the SDP bound {sol.sdp_bound:.10g}")
    return problems


def cmd_validate(args) -> int:
    sol = _load_solution(args.solution)
    p = problem_from_config(load_config(args.config, args.set))
    problems = validate_solution(sol, p)
    if problems:
        for msg in problems:
            print(f"FAIL {msg}")
        return EXIT_INVALID
    print("all checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="reelbeam", description="Beamforming designs that attain the SDP power bound.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("design", help="solve one problem and write solution.json and report.txt")
    d.add_argument("--config", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("sweep", help="run a Monte-Carlo sweep and write records.csv and config.json")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--desk-scale", action="store_true", help="shrink N_t, L and run counts")
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("beampattern", help="print P(theta) for a stored solution")
    b.add_argument("--solution", required=True)
    b.add_argument("--grid-deg", required=True, metavar="START:STOP:STEP")
    b.add_argument("--out")
    b.set_defaults(func=cmd_beampattern)

    v = sub.add_parser("validate", help="re-check a stored solution against its problem")
    v.add_argument("--solution", required=True)
    v.add_argument("--config", required=True)
    v.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    v.set_defaults(func=cmd_validate)
    return ap


def _join_grid(argv):
    # a grid such as -90:90:1 looks like an option to argparse
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok == "--grid-deg":
            out[i:i + 2] = [f"--grid-deg={out[i + 1]}"]
            break
    return out


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(_join_grid(sys.argv[1:] if argv is None else argv))
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"reelbeam: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidInputError as exc:
        print(f"reelbeam: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ReelBeamError as exc:
        print(f"reelbeam: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
