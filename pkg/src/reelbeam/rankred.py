"""Rank reduction (purification) of optimal SDP solutions.

Each block is factored as ``X_m = V_m V_mᴴ``. A Hermitian direction
``Δ_m`` with ``tr(V_mᴴ A V_m Δ_m) = 0`` for every active row keeps all active
rows fixed along ``X_m(t) = V_m (I + tΔ_m) V_mᴴ``; stepping until an
eigenvalue of ``I + tΔ_m`` vanishes removes one dimension from the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import RankReductionError
from .linalg import RANK_FRACTION, herm, hermitian_part, numeric_rank
from .sdp import SdpSolution, StandardSdp, kkt_report, polish, row_slacks, row_values

ACTIVE_TOL = 1e-6
INITIAL_DROP = 1e-8
STEP_DROP = 1e-10


@dataclass
class RankProfile:
    ranks: list[int]
    sum_sq: int
    bound: int
    lemma5_prerequisites: bool = False
    certified_lemma5: bool = False

    @property
    def max_rank(self) -> int:
        return max(self.ranks) if self.ranks else 0

    def csv_rows(self) -> list[dict]:
        return [
            {"user": m, "rank": r, "sum_sq": self.sum_sq, "bound": self.bound,
             "certified_lemma5": self.certified_lemma5}
            for m, r in enumerate(self.ranks)
        ]


def shaping_counts(p: StandardSdp, n_sinr: int | None = None) -> tuple[int, int, int]:
    """``(M, L, P)`` for an SDP built by the model module.

    The first ``M`` constraints are the SINR rows, the rest are joint rows; the
    double-sided entries come in ``P`` groups of ``M``.
    """
    M = len(p.block_dims) if n_sinr is None else n_sinr
    L = len(p.constraints) - M
    P = len(p.double_sided) // M if M else 0
    return M, L, P


def lemma5_prerequisites(p: StandardSdp, x_blocks, tol: float = ACTIVE_TOL) -> bool:
    """``P = 2`` and every double-sided row is inactive or binding at a zero bound."""
    _, _, P = shaping_counts(p)
    if P != 2:
        return False
    for ds in p.double_sided:
        a = hermitian_part(np.asarray(ds.matrix, dtype=complex))
        v = float(np.real(np.sum(np.conj(a) * x_blocks[ds.block])))
        for bound in (ds.lower, ds.upper):
            if math.isfinite(bound) and abs(v - bound) <= tol * (1.0 + abs(bound)) and bound != 0.0:
                return False
    return True


def rank_profile(s: SdpSolution, p: StandardSdp, fraction: float = RANK_FRACTION) -> RankProfile:
    M, L, P = shaping_counts(p)
    ranks = [numeric_rank(x, fraction) for x in s.x_blocks]
    prereq = lemma5_prerequisites(p, s.x_blocks)
    return RankProfile(
        ranks=ranks,
        sum_sq=int(sum(r * r for r in ranks)),
        bound=M + L + P * M,
        lemma5_prerequisites=prereq,
        certified_lemma5=prereq and max(ranks, default=0) <= L + 1,
    )


# ---------------------------------------------------------------------------
# purification
# ---------------------------------------------------------------------------

def _factor(x, drop):
    x = hermitian_part(np.asarray(x, dtype=complex))
    w, v = np.linalg.eigh(x)
    tr = float(np.sum(np.maximum(w, 0.0)))
    if tr <= 0.0:
        return np.zeros((x.shape[0], 0), dtype=complex)
    keep = w > drop * tr
    return v[:, keep] * np.sqrt(w[keep])


def _herm_coords(b: np.ndarray) -> np.ndarray:
    """Real coefficients of ``Δ -> tr(B Δ)`` in the Hermitian coordinates of ``Δ``.

    Coordinates: the diagonal, then ``Re`` and ``Im`` of the strict upper triangle.
    """
    r = b.shape[0]
    iu = np.triu_indices(r, 1)
    return np.concatenate([np.real(np.diag(b)), 2.0 * np.real(b[iu]), 2.0 * np.imag(b[iu])])


def _from_coords(c: np.ndarray, r: int) -> np.ndarray:
    iu = np.triu_indices(r, 1)
    k = len(iu[0])
    d = np.diag(c[:r]).astype(complex)
    d[iu] = c[r:r + k] + 1j * c[r + k:r + 2 * k]
    d[(iu[1], iu[0])] = np.conj(d[iu])
    return d


def _null_space(a: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n)
    norms = np.linalg.norm(a, axis=1)
    a = a[norms > 0] / norms[norms > 0, None]
    if a.shape[0] == 0:
        return np.eye(n)
    _, sv, vt = np.linalg.svd(a)
    rank = int(np.count_nonzero(sv > rtol * sv[0])) if sv.size else 0
    return vt[rank:].T


def reduce(s: SdpSolution, p: StandardSdp, exhaustive: bool = False, max_steps: int | None = None) -> SdpSolution:
    """Purify ``s`` until ``Σ rank² ≤ M + L + PM``.

    With ``exhaustive`` the procedure continues until no feasible
    rank-reducing direction remains, which often reaches lower ranks.
    """
    if not s.optimal:
        raise RankReductionError("rank reduction needs an optimal solution", ranks=None)
    M, L, P = shaping_counts(p)
    bound = M + L + P * M
    rows = p.rows()
    rhs = np.array([r.rhs for r in rows])
    band = ACTIVE_TOL * (1.0 + np.abs(rhs))
    coeffs = [{b: hermitian_part(np.asarray(a, dtype=complex)) for b, a in r.coeffs.items()} for r in rows]
    cost = [hermitian_part(np.asarray(c, dtype=complex)) for c in p.objective]

    factors = [_factor(x, INITIAL_DROP) for x in s.x_blocks]
    if max_steps is None:
        max_steps = 4 * sum(f.shape[1] ** 2 for f in factors) + len(rows) + 10

    for _ in range(max_steps):
        ranks = [f.shape[1] for f in factors]
        if not exhaustive and sum(r * r for r in ranks) <= bound:
            break
        vals = row_values(rows, [f @ herm(f) for f in factors])
        slack = row_slacks(rows, vals)
        active = slack <= band

        sizes = [r * r for r in ranks]
        offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)

        def functional(blocks):
            out = np.zeros(offs[-1])
            for b, a in blocks.items():
                if sizes[b]:
                    f = factors[b]
                    out[offs[b]:offs[b + 1]] = _herm_coords(herm(f) @ a @ f)
            return out

        g_rows = np.array([functional(c) for c in coeffs]) if rows else np.zeros((0, offs[-1]))
        g_obj = functional(dict(enumerate(cost)))
        null = _null_space(g_rows[active])
        with_obj = null.shape[1] >= 2
        if with_obj:
            null = _null_space(np.vstack([g_rows[active], g_obj]))
        if null.shape[1] == 0:
            if exhaustive and sum(r * r for r in ranks) <= bound:
                break
            raise RankReductionError(
                f"no rank-reducing direction while sum of squared ranks {sum(r * r for r in ranks)} > {bound}",
                ranks=ranks,
            )
        coords = null[:, 0]
        deltas = [_from_coords(coords[offs[b]:offs[b + 1]], ranks[b]) for b in range(len(factors))]
        eig = [np.linalg.eigvalsh(d) if d.size else np.zeros(0) for d in deltas]
        lo = min((e[0] for e in eig if e.size), default=0.0)
        hi = max((e[-1] for e in eig if e.size), default=0.0)
        # step length to the PSD boundary for each sign; prefer the sign that
        # moves the objective least (it is flat when the objective row is included)
        c = 0.0 if with_obj else abs(float(g_obj @ coords))
        options = [(c / -lo if lo < 0 else math.inf, 1.0 / -lo if lo < 0 else math.inf, 1.0),
                   (c / hi if hi > 0 else math.inf, 1.0 / hi if hi > 0 else math.inf, -1.0)]
        _, t, sign = min(options)
        if not math.isfinite(t):
            raise RankReductionError("rank-reducing direction is unbounded", ranks=ranks)
        # inactive inequality rows must keep nonnegative slack
        rate = sign * (g_rows @ coords) if rows else np.zeros(0)
        for i in np.flatnonzero(~active):
            signed = rate[i] if rows[i].sense == "GE" else -rate[i]
            if signed < 0:
                t = min(t, slack[i] / -signed)
        new = []
        for f, d in zip(factors, deltas):
            if not d.size:
                new.append(f)
                continue
            w, q = np.linalg.eigh(np.eye(d.shape[0]) + sign * t * d)
            keep = w > STEP_DROP * max(w[-1], 1e-300)
            new.append(f @ (q[:, keep] * np.sqrt(w[keep])))
        factors = new
    else:
        ranks = [f.shape[1] for f in factors]
        if sum(r * r for r in ranks) > bound:
            raise RankReductionError("rank reduction did not converge", ranks=ranks)

    if any(f.shape[1] == 0 for f in factors):
        raise RankReductionError("rank reduction produced a zero block", ranks=[f.shape[1] for f in factors])
    x_blocks = polish(p, [f @ herm(f) for f in factors])
    out = replace(s, x_blocks=x_blocks,
                  objective_value=float(sum(np.real(np.sum(np.conj(c) * x)) for c, x in zip(cost, x_blocks))))
    out.kkt = kkt_report(p, out)
    return out
