"""Low-rank comparison schemes recovered from the SDP covariance.

``RankOne`` uses one beam per user, ``Alamouti2`` two and ``Ostbc4`` four.
The last pays for its code rate of 3/4 with a higher SINR target. When the
SDP solution is low rank the beams follow from an eigendecomposition,
otherwise Gaussian randomization proposes directions and a small linear
program rescales them to feasibility.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidInputError
from .linalg import eig_hermitian, herm, hermitian_part, numeric_rank
from .model import BeamformingProblem, build_original_sdp, complex_gaussian
from .rankred import reduce
from .sdp import SdpSolution, Status, polish, row_violations, solve

logger = logging.getLogger(__name__)

SCHEME_WIDTH = {"RankOne": 1, "Alamouti2": 2, "Ostbc4": 4}
OSTBC4_CODE_RATE = 0.75
FEAS_TOL = 1e-6


@dataclass
class BaselineResult:
    scheme: str
    feasible: bool
    power: float | None
    beamformers: list[np.ndarray] | None
    n_randomizations_used: int = 0
    exact: bool = False
    sdp_bound: float | None = None
    ranks: list[int] = field(default_factory=list)


def exact_if_low_rank(s: SdpSolution, max_rank: int, fraction: float = 1e-4) -> list[np.ndarray] | None:
    """Beams ``W_m`` of width ``max_rank`` with ``W_m W_mᴴ ≈ X_m`` when every rank allows it."""
    if not s.optimal:
        raise InvalidInputError("exact recovery needs an optimal SDP solution")
    if any(numeric_rank(x, fraction) > max_rank for x in s.x_blocks):
        return None
    return [_pad(_top_factor(x, max_rank), max_rank) for x in s.x_blocks]


class _RowModel:
    """Per-row coefficient stacks so candidate beams can be scored quickly."""

    def __init__(self, p: BeamformingProblem):
        self.sdp = build_original_sdp(p)
        self.rows = self.sdp.rows()
        M = p.M
        n = p.n_t
        self.stacks = [np.zeros((len(self.rows), n, n), dtype=complex) for _ in range(M)]
        for i, row in enumerate(self.rows):
            for b, a in row.coeffs.items():
                self.stacks[b][i] = hermitian_part(np.asarray(a, dtype=complex))
        self.rhs = np.array([r.rhs for r in self.rows])
        self.sense = np.array([r.sense for r in self.rows])
        # the LP enforces one-sided rows that come from regular constraints;
        # equalities and split double-sided rows are checked afterwards
        self.lp_rows = np.array([r.sense != "EQ" and r.source[0] == "constraint" for r in self.rows])

    def gains(self, beams) -> np.ndarray:
        """``g[i, m] = A_im • W_m W_mᴴ``."""
        g = np.empty((len(self.rows), len(beams)))
        for m, w in enumerate(beams):
            cov = w @ herm(w)
            g[:, m] = np.real(np.einsum("kij,ji->k", self.stacks[m], cov))
        return g


def _scale(model: _RowModel, beams) -> tuple[np.ndarray, float] | None:
    """Cheapest nonnegative per-user power scaling that makes ``beams`` feasible."""
    g = model.gains(beams)
    cost = np.array([float(np.sum(np.abs(w) ** 2)) for w in beams])
    sel = model.lp_rows
    sign = np.where(model.sense[sel] == "GE", -1.0, 1.0)
    a_ub = g[sel] * sign[:, None]
    b_ub = model.rhs[sel] * sign
    res = linprog(cost, A_ub=a_ub if a_ub.size else None, b_ub=b_ub if a_ub.size else None,
                  bounds=[(0, None)] * len(beams), method="highs")
    if res.status != 0:
        return None
    t = np.maximum(res.x, 0.0)
    values = g @ t
    if np.max(row_violations(model.rows, values), initial=0.0) > FEAS_TOL:
        return None
    return t, float(cost @ t)


def _top_factor(x, width):
    dec = eig_hermitian(x)
    k = min(width, x.shape[0])
    return dec.vectors[:, :k] * np.sqrt(np.maximum(dec.values[:k], 0.0))


def _pad(w, width):
    out = np.zeros((w.shape[0], width), dtype=complex)
    out[:, :w.shape[1]] = w
    return out


def _finish(scheme, model, beams, t, n_used, exact, bound, ranks) -> BaselineResult:
    scaled = [w * math.sqrt(tm) for w, tm in zip(beams, t)]
    power = float(sum(np.sum(np.abs(w) ** 2) for w in scaled))
    return BaselineResult(scheme, True, power, scaled, n_used, exact, bound, ranks)


def gaussian_randomization(s: SdpSolution, p: BeamformingProblem, width: int, n_inst: int = 100,
                           seed: int = 0, scheme: str | None = None) -> BaselineResult:
    """Best of ``n_inst`` Gaussian draws with covariance ``X_m``, each rescaled by an LP.

    Draw ``i`` uses ``numpy.random.default_rng([seed, i])`` so results do not
    depend on evaluation order.
    """
    if width not in (1, 2, 4):
        raise InvalidInputError("width must be 1, 2 or 4")
    if n_inst < 1:
        raise InvalidInputError("n_inst must be positive")
    scheme = scheme or {1: "RankOne", 2: "Alamouti2", 4: "Ostbc4"}[width]
    model = _RowModel(p)
    factors = []
    for x in s.x_blocks:
        dec = eig_hermitian(x)
        pos = dec.values > 0
        factors.append(dec.vectors[:, pos] * np.sqrt(dec.values[pos]))
    ranks = [numeric_rank(x) for x in s.x_blocks]
    best = None
    for i in range(n_inst):
        rng = np.random.default_rng([seed, i])
        beams = [f @ complex_gaussian(rng, f.shape[1], width) for f in factors]
        scaled = _scale(model, beams)
        if scaled is None:
            continue
        t, power = scaled
        if best is None or power < best[0]:
            best = (power, beams, t)
    if best is None:
        return BaselineResult(scheme, False, None, None, n_inst, False, s.objective_value, ranks)
    return _finish(scheme, model, best[1], best[2], n_inst, False, s.objective_value, ranks)


def design_baseline(s: SdpSolution, p: BeamformingProblem, scheme: str, n_inst: int = 100,
                    seed: int = 0) -> BaselineResult:
    """Exact recovery when ranks allow it, Gaussian randomization otherwise."""
    width = SCHEME_WIDTH[scheme]
    exact = exact_if_low_rank(s, width)
    if exact is not None:
        model = _RowModel(p)
        # truncation drops eigenvalues below the rank threshold; restore the rows
        fixed = polish(model.sdp, [w @ herm(w) for w in exact])
        exact = [_pad(f, width) for f in (_top_factor(x, width) for x in fixed)]
        scaled = _scale(model, exact)
        if scaled is not None:
            return _finish(scheme, model, exact, scaled[0], 0, True, s.objective_value,
                           [numeric_rank(x) for x in s.x_blocks])
    return gaussian_randomization(s, p, width, n_inst, seed, scheme)


def scheme_sinr_target(scheme: str, gamma):
    """SINR target a scheme must meet for the rate that ``gamma`` supports."""
    gamma = np.asarray(gamma, dtype=float)
    if scheme == "Ostbc4":
        return (1.0 + gamma) ** (1.0 / OSTBC4_CODE_RATE) - 1.0
    return gamma


def target_key(targets) -> tuple:
    """Cache key for an SDP solved at the given SINR targets."""
    return tuple(float(g) for g in np.round(np.asarray(targets, dtype=float), 12))


def evaluate_baselines(p: BeamformingProblem, r_bits: float | None = None, n_inst: int = 100, seed: int = 0,
                       schemes=("RankOne", "Alamouti2", "Ostbc4"), reduce_rank: bool = False,
                       solutions: dict | None = None) -> list[BaselineResult]:
    """Evaluate the baseline schemes on ``p``.

    ``r_bits`` sets every user's rate; otherwise the problem's own SINR
    targets define the rate. ``solutions`` may carry already solved SDPs keyed
    by the rounded target tuple, and is filled in as a cache.
    """
    for sch in schemes:
        if sch not in SCHEME_WIDTH:
            raise InvalidInputError(f"unknown baseline scheme {sch!r}")
    gamma = (np.full(p.M, 2.0 ** r_bits - 1.0) if r_bits is not None else p.sinr_targets)
    cache = {} if solutions is None else solutions
    out = []
    for sch in schemes:
        targets = scheme_sinr_target(sch, gamma)
        q = p.with_sinr_targets(targets)
        key = target_key(targets)
        if key not in cache:
            s = solve(build_original_sdp(q))
            if s.optimal and reduce_rank:
                s = reduce(s, build_original_sdp(q), exhaustive=True)
            cache[key] = s
        s = cache[key]
        if s.status is not Status.OPTIMAL:
            logger.info("%s: SDP relaxation is %s", sch, s.status.value)
            out.append(BaselineResult(sch, False, None, None, 0, False, None))
            continue
        out.append(design_baseline(s, q, sch, n_inst, seed))
    return out
