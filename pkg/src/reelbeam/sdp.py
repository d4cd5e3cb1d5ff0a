"""Primal-dual interior-point solver for small complex Hermitian SDPs.

Problems have the form::

    minimize    sum_b  C_b • X_b
    subject to  sum_b  A_ib • X_b  (<=, =, >=)  b_i
                lower <= G • X_k <= upper          (double-sided, one block)
                X_b >= 0 (PSD)

Each complex ``n x n`` block is embedded as a real symmetric ``2n x 2n`` block
and the resulting real SDP is solved by a Mehrotra predictor-corrector method
with Nesterov-Todd scaling. Inequality rows carry a nonnegative slack.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr, solve_triangular

from .errors import InvalidInputError
from .linalg import check_hermitian, herm, hermitian_part

logger = logging.getLogger(__name__)

SENSES = ("LE", "EQ", "GE")


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NUMERICAL_TROUBLE = "NumericalTrouble"


@dataclass
class Constraint:
    """One scalar row ``sum_b coeffs[b] • X_b (sense) rhs``."""

    coeffs: dict[int, np.ndarray]
    sense: str
    rhs: float
    label: str = ""


@dataclass
class DoubleSided:
    block: int
    matrix: np.ndarray
    lower: float = -math.inf
    upper: float = math.inf
    label: str = ""


@dataclass(frozen=True)
class Row:
    """A one-sided row after splitting double-sided entries."""

    coeffs: dict
    sense: str
    rhs: float
    source: tuple


@dataclass
class StandardSdp:
    block_dims: list[int]
    objective: list[np.ndarray]
    constraints: list[Constraint] = field(default_factory=list)
    double_sided: list[DoubleSided] = field(default_factory=list)

    def validate(self) -> None:
        if not self.block_dims or any(int(n) < 1 for n in self.block_dims):
            raise InvalidInputError("block dimensions must be positive")
        if len(self.objective) != len(self.block_dims):
            raise InvalidInputError("one objective matrix per block is required")
        for b, (c, n) in enumerate(zip(self.objective, self.block_dims)):
            c = check_hermitian(c)
            if c.shape != (n, n):
                raise InvalidInputError(f"objective block {b} has shape {c.shape}, expected {(n, n)}")
        for i, con in enumerate(self.constraints):
            if con.sense not in SENSES:
                raise InvalidInputError(f"constraint {i}: unknown sense {con.sense!r}")
            if not math.isfinite(con.rhs):
                raise InvalidInputError(f"constraint {i}: rhs must be finite")
            for b, a in con.coeffs.items():
                if not 0 <= b < len(self.block_dims):
                    raise InvalidInputError(f"constraint {i}: block index {b} out of range")
                a = check_hermitian(a)
                n = self.block_dims[b]
                if a.shape != (n, n):
                    raise InvalidInputError(f"constraint {i}: block {b} shape {a.shape} != {(n, n)}")
        for i, ds in enumerate(self.double_sided):
            if not 0 <= ds.block < len(self.block_dims):
                raise InvalidInputError(f"double-sided {i}: block index out of range")
            g = check_hermitian(ds.matrix)
            n = self.block_dims[ds.block]
            if g.shape != (n, n):
                raise InvalidInputError(f"double-sided {i}: shape {g.shape} != {(n, n)}")
            if math.isnan(ds.lower) or math.isnan(ds.upper) or ds.lower > ds.upper:
                raise InvalidInputError(f"double-sided {i}: need lower <= upper")

    def rows(self) -> list[Row]:
        """One-sided rows; infinite bounds of double-sided entries are dropped."""
        out = [Row(c.coeffs, c.sense, float(c.rhs), ("constraint", i, "")) for i, c in enumerate(self.constraints)]
        for i, ds in enumerate(self.double_sided):
            coeffs = {ds.block: ds.matrix}
            if math.isfinite(ds.lower):
                out.append(Row(coeffs, "GE", float(ds.lower), ("double", i, "lower")))
            if math.isfinite(ds.upper):
                out.append(Row(coeffs, "LE", float(ds.upper), ("double", i, "upper")))
        return out


@dataclass
class KktReport:
    primal_residual: float
    dual_residual: float
    gap: float
    complementarity: float

    def as_dict(self) -> dict:
        return {
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "gap": self.gap,
            "complementarity": self.complementarity,
        }


@dataclass
class SdpSolution:
    x_blocks: list[np.ndarray]
    objective_value: float
    duals: np.ndarray
    status: Status
    kkt: KktReport | None = None
    z_blocks: list[np.ndarray] | None = None
    iterations: int = 0
    certificate: np.ndarray | None = None
    infeasibility: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# ---------------------------------------------------------------------------
# complex <-> real embedding
# ---------------------------------------------------------------------------

def embed_hermitian(a: np.ndarray) -> np.ndarray:
    """``[[Re, -Im], [Im, Re]]`` for a Hermitian (or stacked Hermitian) array."""
    re, im = np.real(a), np.imag(a)
    top = np.concatenate([re, -im], axis=-1)
    bot = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def deembed(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_hermitian`, averaging the redundant copies."""
    n = x.shape[-1] // 2
    x11, x12 = x[..., :n, :n], x[..., :n, n:]
    x21, x22 = x[..., n:, :n], x[..., n:, n:]
    return 0.5 * (x11 + x22) + 0.5j * (x21 - x12)


@dataclass
class RealSdp:
    """Real symmetric form with one nonnegative slack per inequality row.

    ``a_blocks[b]`` has shape ``(m, 2n_b, 2n_b)``, ``a_lp`` shape
    ``(m, n_slack)``. Inner products equal their complex counterparts because
    every embedded matrix carries a factor 1/2.
    """

    dims: list[int]
    c_blocks: list[np.ndarray]
    a_blocks: list[np.ndarray]
    a_lp: np.ndarray
    c_lp: np.ndarray
    b: np.ndarray
    rows: list[Row]


EMBED_SCALE = 0.5


def embed_real(p: StandardSdp) -> RealSdp:
    p.validate()
    rows = p.rows()
    m = len(rows)
    dims = [2 * int(n) for n in p.block_dims]
    c_blocks = [EMBED_SCALE * embed_hermitian(hermitian_part(np.asarray(c, dtype=complex))) for c in p.objective]
    a_blocks = [np.zeros((m, d, d)) for d in dims]
    n_slack = sum(1 for r in rows if r.sense != "EQ")
    a_lp = np.zeros((m, n_slack))
    b = np.zeros(m)
    k = 0
    for i, row in enumerate(rows):
        for blk, a in row.coeffs.items():
            a_blocks[blk][i] = EMBED_SCALE * embed_hermitian(hermitian_part(np.asarray(a, dtype=complex)))
        b[i] = row.rhs
        if row.sense == "GE":
            a_lp[i, k] = -1.0
            k += 1
        elif row.sense == "LE":
            a_lp[i, k] = 1.0
            k += 1
    return RealSdp(dims, c_blocks, a_blocks, a_lp, np.zeros(n_slack), b, rows)


# ---------------------------------------------------------------------------
# interior-point core
# ---------------------------------------------------------------------------

def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _factor(x):
    try:
        return np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(_sym(x))
        w = np.maximum(w, 1e-300)
        return v * np.sqrt(w)


def _max_step(lam, dhat):
    """Largest alpha with diag(lam) + alpha*dhat PSD (inf if unbounded)."""
    if dhat.ndim == 1:
        neg = dhat < 0
        if not np.any(neg):
            return math.inf
        return float(np.min(-lam[neg] / dhat[neg]))
    s = 1.0 / np.sqrt(lam)
    g = _sym(dhat * s[:, None] * s[None, :])
    wmin = np.linalg.eigvalsh(g)[0]
    return math.inf if wmin >= 0 else -1.0 / wmin


@dataclass
class _IpmResult:
    x_blocks: list
    z_blocks: list
    x_lp: np.ndarray
    z_lp: np.ndarray
    y: np.ndarray
    status: Status
    iterations: int
    certificate: np.ndarray | None
    infeasibility: float | None


def _ipm(rs: RealSdp, max_iters: int, tol_gap: float, tol_feas: float, tol_infeas: float) -> _IpmResult:
    m = len(rs.b)
    dims = rs.dims
    # row equilibration; duals are mapped back at the end
    norms = np.sqrt(sum(np.sum(a.reshape(m, -1) ** 2, axis=1) for a in rs.a_blocks) + np.sum(rs.a_lp ** 2, axis=1))
    norms[norms == 0] = 1.0
    rscale = 1.0 / norms
    a_blocks = [a * rscale[:, None, None] for a in rs.a_blocks]
    a_flat = [a.reshape(m, -1) for a in a_blocks]
    a_lp = rs.a_lp * rscale[:, None]
    b = rs.b * rscale
    c_blocks = rs.c_blocks
    c_lp = rs.c_lp
    n_lp = a_lp.shape[1]
    nu = sum(dims) + n_lp

    norm_b = np.linalg.norm(b)
    norm_c = math.sqrt(sum(np.sum(c ** 2) for c in c_blocks) + float(c_lp @ c_lp))

    rho = 1.0 + (np.max(np.abs(b)) if m else 0.0)
    X = [rho * np.eye(d) for d in dims]
    Z = [rho * np.eye(d) for d in dims]
    x = np.full(n_lp, rho)
    z = np.full(n_lp, rho)
    y = np.zeros(m)

    status = Status.NUMERICAL_TROUBLE
    certificate = None
    infeas_measure = None
    best = None
    best_it = 0
    stall = 0
    it = 0
    for it in range(1, max_iters + 1):
        ax = sum(af @ Xb.ravel() for af, Xb in zip(a_flat, X)) + a_lp @ x if m else np.zeros(0)
        rp = b - ax
        aty = [(y @ af).reshape(d, d) for af, d in zip(a_flat, dims)]
        rd = [c - Zb - t for c, Zb, t in zip(c_blocks, Z, aty)]
        rd_lp = c_lp - z - a_lp.T @ y
        pobj = sum(float(np.sum(c * Xb)) for c, Xb in zip(c_blocks, X)) + float(c_lp @ x)
        dobj = float(b @ y)
        comp = sum(float(np.sum(Xb * Zb)) for Xb, Zb in zip(X, Z)) + float(x @ z)
        mu = comp / nu
        pinf = np.linalg.norm(rp) / (1.0 + norm_b)
        dinf = math.sqrt(sum(np.sum(r ** 2) for r in rd) + float(rd_lp @ rd_lp)) / (1.0 + norm_c)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        merit = max(pinf, dinf, gap)
        if best is None or merit < best[0]:
            best = (merit, [Xb.copy() for Xb in X], [Zb.copy() for Zb in Z], x.copy(), z.copy(), y.copy())
            best_it = it
        elif best[0] < 1e-6 and it - best_it >= 15:
            # no progress for a while: rounding noise dominates the Newton steps
            break
        logger.debug("it %3d pobj %.9e dobj %.9e pinf %.2e dinf %.2e gap %.2e", it, pobj, dobj, pinf, dinf, gap)
        if pinf <= tol_feas and dinf <= tol_feas and gap <= tol_gap:
            status = Status.OPTIMAL
            break
        if dobj > 0:
            ray_res = math.sqrt(sum(np.sum((c - r) ** 2) for c, r in zip(c_blocks, rd))
                                + float(np.sum((c_lp - rd_lp) ** 2)))
            measure = ray_res / dobj
            if measure < tol_infeas:
                status = Status.INFEASIBLE
                certificate = y * rscale / dobj
                infeas_measure = measure
                break

        # Nesterov-Todd scaling per block: R^{-1} X R^{-T} = R^T Z R = diag(lam)
        lams, Rs, Ts, rdh = [], [], [], []
        for Xb, Zb, ab, rdb in zip(X, Z, a_blocks, rd):
            l1 = _factor(Xb)
            l2 = _factor(Zb)
            u, lam, vt = np.linalg.svd(l2.T @ l1)
            lam = np.maximum(lam, 1e-300)
            R = (l1 @ vt.T) / np.sqrt(lam)
            lams.append(lam)
            Rs.append(R)
            Ts.append((R.T @ ab @ R).reshape(m, -1))
            rdh.append(R.T @ rdb @ R)
        lam_lp = np.sqrt(x * z)
        w_lp = np.sqrt(x / z)
        t_lp = a_lp * w_lp
        rdh_lp = rd_lp * w_lp

        # M = G Gᵀ; a QR factor of Gᵀ avoids squaring its condition number
        G = np.hstack(Ts + [t_lp])
        rfac = qr(G.T, mode="r", check_finite=False)[0][:m]
        if np.min(np.abs(np.diag(rfac)), initial=np.inf) > 1e-15 * np.max(np.abs(np.diag(rfac)), initial=0.0):
            def solve_m(r):
                return solve_triangular(rfac, solve_triangular(rfac, r, trans="T"))
        else:
            M = G @ G.T
            Mr = M + 1e-14 * max(np.trace(M), 1.0) * np.eye(m)
            solve_m = lambda r: np.linalg.lstsq(Mr, r, rcond=None)[0]

        def direction(rc, rc_lp):
            S = [r * (2.0 / (lam[:, None] + lam[None, :])) for r, lam in zip(rc, lams)]
            s_lp = rc_lp / lam_lp
            rhs = rp - sum(t @ (s - r).ravel() for t, s, r in zip(Ts, S, rdh)) - t_lp @ (s_lp - rdh_lp)
            dy = solve_m(rhs)
            dzh = [r - (dy @ t).reshape(r.shape) for r, t in zip(rdh, Ts)]
            dxh = [s - d for s, d in zip(S, dzh)]
            dzh_lp = rdh_lp - t_lp.T @ dy
            dxh_lp = s_lp - dzh_lp
            return dy, dxh, dzh, dxh_lp, dzh_lp

        def steps(dxh, dzh, dxh_lp, dzh_lp):
            ap = min([_max_step(l, d) for l, d in zip(lams, dxh)] + [_max_step(lam_lp, dxh_lp)])
            ad = min([_max_step(l, d) for l, d in zip(lams, dzh)] + [_max_step(lam_lp, dzh_lp)])
            return ap, ad

        # predictor
        rc = [-np.diag(lam ** 2) for lam in lams]
        rc_lp = -lam_lp ** 2
        _, dxh, dzh, dxh_lp, dzh_lp = direction(rc, rc_lp)
        ap, ad = steps(dxh, dzh, dxh_lp, dzh_lp)
        ap, ad = min(1.0, ap), min(1.0, ad)
        comp_aff = sum(float(np.sum((np.diag(l) + ap * dx) * (np.diag(l) + ad * dz)))
                       for l, dx, dz in zip(lams, dxh, dzh))
        comp_aff += float((lam_lp + ap * dxh_lp) @ (lam_lp + ad * dzh_lp))
        sigma = min(1.0, max(0.0, comp_aff / comp)) ** 3

        # corrector
        rc = []
        for lam, dx, dz in zip(lams, dxh, dzh):
            corr = _sym(dx @ dz)
            rc.append(sigma * mu * np.eye(len(lam)) - np.diag(lam ** 2) - corr)
        rc_lp = sigma * mu - lam_lp ** 2 - dxh_lp * dzh_lp
        dy, dxh, dzh, dxh_lp, dzh_lp = direction(rc, rc_lp)
        ap, ad = steps(dxh, dzh, dxh_lp, dzh_lp)
        frac = 0.98
        ap = min(1.0, frac * ap)
        ad = min(1.0, frac * ad)
        if ap < 1e-10 and ad < 1e-10:
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0

        for k, (R, d) in enumerate(zip(Rs, dxh)):
            X[k] = _sym(X[k] + ap * (R @ d @ R.T))
        for k, (d, t) in enumerate(zip(dims, a_flat)):
            dZ = rd[k] - (dy @ t).reshape(d, d)
            Z[k] = _sym(Z[k] + ad * dZ)
        x = x + ap * w_lp * dxh_lp
        z = z + ad * (rd_lp - a_lp.T @ dy)
        y = y + ad * dy

    if status is Status.NUMERICAL_TROUBLE and best is not None:
        _, X, Z, x, z, y = best
    return _IpmResult(X, Z, x, z, y * rscale, status, it, certificate, infeas_measure)


def solve(p: StandardSdp, max_iters: int = 200, tol_gap: float = 1e-9, tol_feas: float = 1e-9,
          tol_infeas: float = 1e-8, accept: float = 1e-7, polish_output: bool = True) -> SdpSolution:
    """Solve ``p``; the returned solution is always checked with :func:`kkt_report`.

    With ``polish_output`` the primal iterate is passed through :func:`polish`
    so tight rows hold to rounding accuracy rather than to the IPM tolerance.

    A run that stalls before reaching ``tol_gap``/``tol_feas`` is still
    reported Optimal when the independent KKT check passes at ``accept``.
    """
    if not p.constraints and not p.double_sided:
        raise InvalidInputError("problem has no constraints")
    rs = embed_real(p)
    res = _ipm(rs, max_iters, tol_gap, tol_feas, tol_infeas)
    x_blocks = [hermitian_part(deembed(Xb)) for Xb in res.x_blocks]
    if polish_output and res.status is not Status.INFEASIBLE:
        x_blocks = polish(p, x_blocks)
    # dual slack of the complex problem is twice the de-embedded real one
    z_blocks = [hermitian_part(deembed(Zb)) / EMBED_SCALE for Zb in res.z_blocks]
    obj = float(sum(np.real(np.sum(np.conj(c) * X)) for c, X in zip(p.objective, x_blocks)))
    sol = SdpSolution(
        x_blocks=x_blocks,
        objective_value=obj,
        duals=res.y,
        status=res.status,
        z_blocks=z_blocks,
        iterations=res.iterations,
        certificate=res.certificate,
        infeasibility=res.infeasibility,
    )
    if res.status is Status.INFEASIBLE:
        return sol
    sol.kkt = kkt_report(p, sol)
    k = sol.kkt
    ok = max(k.primal_residual, k.dual_residual, k.gap) <= accept
    if res.status is Status.OPTIMAL and not ok:
        sol.status = Status.NUMERICAL_TROUBLE
    elif res.status is Status.NUMERICAL_TROUBLE and ok:
        sol.status = Status.OPTIMAL
    if not sol.optimal:
        logger.info("SDP stopped after %d iterations with residuals %s", res.iterations, k.as_dict())
    return sol


# ---------------------------------------------------------------------------
# certificate checking
# ---------------------------------------------------------------------------

def _inner(a, x) -> float:
    return float(np.real(np.sum(np.conj(a) * x)))


def row_values(rows: list[Row], x_blocks) -> np.ndarray:
    return np.array([sum(_inner(a, x_blocks[b]) for b, a in row.coeffs.items()) for row in rows])


def row_violations(rows: list[Row], values: np.ndarray) -> np.ndarray:
    """Violation of each row scaled by ``1 + |rhs|`` (zero when satisfied)."""
    out = np.zeros(len(rows))
    for i, (row, v) in enumerate(zip(rows, values)):
        if row.sense == "GE":
            d = max(0.0, row.rhs - v)
        elif row.sense == "LE":
            d = max(0.0, v - row.rhs)
        else:
            d = abs(v - row.rhs)
        out[i] = d / (1.0 + abs(row.rhs))
    return out


def row_slacks(rows: list[Row], values: np.ndarray) -> np.ndarray:
    """Signed slack of each row; negative means violated (EQ rows are never positive)."""
    out = np.empty(len(rows))
    for i, (row, v) in enumerate(zip(rows, values)):
        if row.sense == "GE":
            out[i] = v - row.rhs
        elif row.sense == "LE":
            out[i] = row.rhs - v
        else:
            out[i] = -abs(v - row.rhs)
    return out


def polish(p: StandardSdp, x_blocks, active_tol: float = 1e-6, drop: float = 1e-10,
           max_steps: int = 6) -> list[np.ndarray]:
    """Push a near-feasible solution exactly onto its tight rows.

    Each block is written as ``V Vᴴ`` (eigenvalues below ``drop·trace``
    removed) and ``V`` receives minimum-norm Gauss-Newton corrections that put
    every tight or violated row on its bound. Blocks stay PSD by construction.
    The input is returned unchanged when it is already feasible or when no
    improvement is found.
    """
    rows = p.rows()
    blocks = [hermitian_part(np.asarray(x, dtype=complex)) for x in x_blocks]
    if not rows:
        return blocks
    start = float(np.max(row_violations(rows, row_values(rows, blocks)), initial=0.0))
    if start == 0.0:
        return blocks
    factors = []
    for X in blocks:
        w, v = np.linalg.eigh(X)
        tr = max(float(np.sum(np.maximum(w, 0.0))), 1e-300)
        keep = w > drop * tr
        factors.append(v[:, keep] * np.sqrt(w[keep]))
    rhs = np.array([r.rhs for r in rows])
    band = active_tol * (1.0 + np.abs(rhs))
    coeffs = [{b: hermitian_part(np.asarray(a, dtype=complex)) for b, a in r.coeffs.items()} for r in rows]
    sizes = [f.size for f in factors]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    best, best_v = None, start
    for step in range(max_steps):
        vals = row_values(rows, [f @ herm(f) for f in factors])
        viol = float(np.max(row_violations(rows, vals), initial=0.0))
        if viol < best_v:
            best, best_v = [f.copy() for f in factors], viol
        if viol <= 1e-14 or step == max_steps - 1:
            break
        tight = np.flatnonzero(row_slacks(rows, vals) <= band)
        J = np.zeros((tight.size, 2 * offsets[-1]))
        for k, i in enumerate(tight):
            for b, a in coeffs[i].items():
                # d/dV tr(Vᴴ A V) along E is 2 Re <A V, E>
                g = a @ factors[b]
                lo, n = 2 * offsets[b], sizes[b]
                J[k, lo:lo + n] = 2.0 * g.real.ravel()
                J[k, lo + n:lo + 2 * n] = 2.0 * g.imag.ravel()
        delta = np.linalg.lstsq(J, rhs[tight] - vals[tight], rcond=None)[0]
        for b, f in enumerate(factors):
            lo, n = 2 * offsets[b], sizes[b]
            d = delta[lo:lo + n] + 1j * delta[lo + n:lo + 2 * n]
            factors[b] = f + d.reshape(f.shape)
    if best is None:
        return blocks
    return [hermitian_part(f @ herm(f)) for f in best]


def kkt_report(p: StandardSdp, s: SdpSolution) -> KktReport:
    """Recompute primal/dual feasibility, gap and complementarity from scratch."""
    rows = p.rows()
    if len(s.x_blocks) != len(p.block_dims):
        raise InvalidInputError("solution has the wrong number of blocks")
    for b, (X, n) in enumerate(zip(s.x_blocks, p.block_dims)):
        if np.shape(X) != (n, n):
            raise InvalidInputError(f"block {b} has shape {np.shape(X)}, expected {(n, n)}")
    y = np.asarray(s.duals, dtype=float)
    if y.shape != (len(rows),):
        raise InvalidInputError(f"expected {len(rows)} duals, got {y.shape}")

    values = row_values(rows, s.x_blocks)
    primal = float(np.max(row_violations(rows, values), initial=0.0))
    for X in s.x_blocks:
        X = hermitian_part(np.asarray(X, dtype=complex))
        wmin = np.linalg.eigvalsh(X)[0]
        primal = max(primal, max(0.0, -wmin) / (1.0 + abs(np.real(np.trace(X)))))

    z_blocks = [hermitian_part(np.asarray(c, dtype=complex)) for c in p.objective]
    for yi, row in zip(y, rows):
        for b, a in row.coeffs.items():
            z_blocks[b] = z_blocks[b] - yi * hermitian_part(np.asarray(a, dtype=complex))
    cnorm = 1.0 + max(np.linalg.norm(c) for c in p.objective)
    dual = 0.0
    for Zb in z_blocks:
        wmin = np.linalg.eigvalsh(Zb)[0]
        dual = max(dual, max(0.0, -wmin) / cnorm)
    for yi, row in zip(y, rows):
        scale = math.sqrt(sum(np.linalg.norm(a) ** 2 for a in row.coeffs.values()))
        if row.sense == "GE":
            dual = max(dual, max(0.0, -yi) * scale / cnorm)
        elif row.sense == "LE":
            dual = max(dual, max(0.0, yi) * scale / cnorm)

    pobj = sum(_inner(c, X) for c, X in zip(p.objective, s.x_blocks))
    dobj = float(sum(yi * row.rhs for yi, row in zip(y, rows)))
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    comp = sum(_inner(Zb, X) for Zb, X in zip(z_blocks, s.x_blocks))
    return KktReport(primal, dual, gap, comp)
