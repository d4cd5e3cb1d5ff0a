"""REEL-BF design: information beamformer plus shaping beamformers per user.

The optimal SDP covariance ``X_m`` is rotated into the basis
``U_m = [h̄_m, F_m]`` and split as ``X̄ = [[η, ξᴴ], [ξ, Γ]]``. The first
beamformer carries the information symbol, the remaining ``K - 1`` carry
redundant signals and lie in the null space of ``h_mᴴ``, so they shape the
radiated pattern without interfering with user ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateSolutionError, InvalidInputError, KTooSmallError, NotPsdError,
                     SdpInfeasibleError, SdpNumericalError)
from .linalg import PSD_TOL, eig_hermitian, herm, hermitian_part, is_unitary, rotation_matrix
from .model import BeamformingProblem, build_original_sdp, decode_complex, encode_complex
from .rankred import RankProfile, rank_profile, reduce
from .sdp import SdpSolution, Status, solve


def _ceil_sqrt(n: int) -> int:
    s = math.isqrt(n)
    return s if s * s == n else s + 1


def select_k(L: int, P: int, M: int, n_t: int, lemma5_ok: bool = False) -> int:
    """Number of beamformers per user that guarantees the SDP bound is attained."""
    if min(L, P) < 0 or M < 1 or n_t < 1:
        raise InvalidInputError("need L, P >= 0, M >= 1 and n_t >= 1")
    k = min(_ceil_sqrt(L + P * M + 1) + 2, n_t)
    if lemma5_ok:
        k = min(k, L + 3)
    return max(k, 1)


@dataclass
class RotatedSolution:
    eta: list[float]
    xi: list[np.ndarray]
    gamma: list[np.ndarray]
    rotations: list[np.ndarray]

    def x_bar(self, m: int) -> np.ndarray:
        n = self.xi[m].shape[0] + 1
        out = np.empty((n, n), dtype=complex)
        out[0, 0] = self.eta[m]
        out[1:, 0] = self.xi[m]
        out[0, 1:] = np.conj(self.xi[m])
        out[1:, 1:] = self.gamma[m]
        return out


@dataclass
class Decomposition:
    alpha: float
    beta: np.ndarray
    omega_bar: np.ndarray
    R: int


@dataclass
class UserBeams:
    W: np.ndarray
    alpha: float
    beta: np.ndarray
    omega: np.ndarray
    R: int


@dataclass
class ReelBfSolution:
    K: int
    users: list[UserBeams]
    power: float
    sdp_bound: float
    profile: RankProfile | None = None
    sdp: SdpSolution | None = field(default=None, repr=False)

    @property
    def beamformers(self) -> list[np.ndarray]:
        return [u.W for u in self.users]


def rotate(s: SdpSolution, rotations) -> RotatedSolution:
    if len(rotations) != len(s.x_blocks):
        raise InvalidInputError("need one rotation per user")
    eta, xi, gamma, rots = [], [], [], []
    for m, (x, u) in enumerate(zip(s.x_blocks, rotations)):
        u = np.asarray(u, dtype=complex)
        if u.shape != np.shape(x) or not is_unitary(u):
            raise InvalidInputError(f"rotation {m} is not unitary or has the wrong size")
        xb = hermitian_part(herm(u) @ x @ u)
        e = float(np.real(xb[0, 0]))
        # h̄ᴴ X h̄ is the useful signal power of user m, positive for any positive SINR target
        if not e > 1e-10 * float(np.real(np.trace(xb))):
            raise DegenerateSolutionError(f"user {m}: eta = {e:.3e} is not positive")
        eta.append(e)
        xi.append(xb[1:, 0].copy())
        gamma.append(xb[1:, 1:].copy())
        rots.append(u)
    return RotatedSolution(eta, xi, gamma, rots)


def decompose(r: RotatedSolution, tol: float = PSD_TOL) -> list[Decomposition]:
    """Split each rotated covariance into ``α``, ``β`` and a factor of the Schur complement.

    Eigenvalues of ``Γ - ξξᴴ/η`` below ``tol·tr(X̄)`` are treated as zero.
    """
    out = []
    for m, (eta, xi, gamma) in enumerate(zip(r.eta, r.xi, r.gamma)):
        scale = eta + float(np.real(np.trace(gamma)))
        alpha = math.sqrt(eta)
        beta = xi / alpha
        schur = hermitian_part(gamma - np.outer(xi, np.conj(xi)) / eta)
        if schur.size == 0:
            out.append(Decomposition(alpha, beta, np.zeros((0, 0), dtype=complex), 0))
            continue
        dec = eig_hermitian(schur)
        if dec.values[-1] < -tol * scale:
            raise NotPsdError(f"user {m}: Schur complement has eigenvalue {dec.values[-1]:.3e}",
                              dec.values[-1])
        keep = dec.values >= tol * scale
        omega_bar = dec.vectors[:, keep] * np.sqrt(dec.values[keep])
        out.append(Decomposition(alpha, beta, omega_bar, int(np.count_nonzero(keep))))
    return out


def assemble(decomps: list[Decomposition], rotations, K: int) -> ReelBfSolution:
    users = []
    for m, (d, u) in enumerate(zip(decomps, rotations)):
        n = np.shape(u)[0]
        if d.R > K - 1:
            raise KTooSmallError(f"user {m} needs {d.R + 1} beamformers but K = {K}", user=m, rank=d.R, k=K)
        if K > n:
            raise InvalidInputError(f"K = {K} exceeds the number of antennas {n}")
        omega = np.zeros((n - 1, K - 1), dtype=complex)
        omega[:, :d.R] = d.omega_bar
        wbar = np.zeros((n, K), dtype=complex)
        wbar[0, 0] = d.alpha
        wbar[1:, 0] = d.beta
        wbar[1:, 1:] = omega
        users.append(UserBeams(np.asarray(u) @ wbar, d.alpha, d.beta.copy(), omega, d.R))
    power = float(sum(np.sum(np.abs(u.W) ** 2) for u in users))
    return ReelBfSolution(K=K, users=users, power=power, sdp_bound=math.nan)


def run_algorithm1(p: BeamformingProblem, reduce_rank: bool = True, exhaustive: bool = False,
                   K: int | None = None, solver_opts: dict | None = None,
                   sdp_solution: SdpSolution | None = None) -> ReelBfSolution:
    """Solve the SDP relaxation and build REEL-BF beamformers attaining its bound.

    ``K`` defaults to :func:`select_k`; the smaller ``L + 3`` choice is only
    used when the reduced solution certifies it. A solution of
    ``build_original_sdp(p)`` obtained elsewhere may be passed as ``sdp_solution``.
    """
    p.validate()
    sdp_problem = build_original_sdp(p)
    s = sdp_solution if sdp_solution is not None else solve(sdp_problem, **(solver_opts or {}))
    if s.status is Status.INFEASIBLE:
        raise SdpInfeasibleError(
            f"SDP relaxation is infeasible (certificate measure {s.infeasibility:.2e})", solution=s)
    if s.status is not Status.OPTIMAL:
        raise SdpNumericalError(f"SDP solver stopped with residuals {s.kkt.as_dict()}", solution=s)
    reduced = reduce(s, sdp_problem, exhaustive=exhaustive) if reduce_rank else s
    profile = rank_profile(reduced, sdp_problem)
    rotations = [rotation_matrix(h) for h in p.channels]
    decomps = decompose(rotate(reduced, rotations))
    if K is None:
        K = select_k(p.L, p.P, p.M, p.n_t, lemma5_ok=profile.certified_lemma5)
        if not reduce_rank:
            # raw solver output carries no rank guarantee; K = N_t always suffices
            K = max(K, max(d.R for d in decomps) + 1)
    sol = assemble(decomps, rotations, K)
    sol.sdp_bound = s.objective_value
    sol.profile = profile
    sol.sdp = reduced
    return sol


# ---------------------------------------------------------------------------
# checks on a designed solution
# ---------------------------------------------------------------------------

def received_powers(beamformers, h) -> np.ndarray:
    """``‖hᴴ W_j‖²`` for every user's beamforming matrix ``W_j``."""
    h = np.asarray(h, dtype=complex).reshape(-1)
    return np.array([float(np.sum(np.abs(np.conj(h) @ np.asarray(w)) ** 2)) for w in beamformers])


def achieved_sinr(sol, p: BeamformingProblem, check_orthogonality: bool = True) -> np.ndarray:
    """Per-user SINR of the covariance ``W_m W_mᴴ``.

    With ``check_orthogonality`` the signal term is compared with
    ``|h_mᴴ w_{m,1}|²``, which it must equal when the shaping beams are
    orthogonal to ``h_m``.
    """
    beams = sol.beamformers if isinstance(sol, ReelBfSolution) else list(sol)
    if len(beams) != p.M or any(np.shape(w)[0] != p.n_t for w in beams):
        raise InvalidInputError("beamformers do not match the problem dimensions")
    out = np.empty(p.M)
    for m, (h, s2) in enumerate(zip(p.channels, p.noise_vars)):
        rx = received_powers(beams, h)
        signal = rx[m]
        if check_orthogonality:
            first = abs(np.vdot(h, np.asarray(beams[m])[:, 0])) ** 2
            if abs(first - signal) > 1e-7 * max(signal, 1e-300):
                raise InvalidInputError(f"user {m}: shaping beams leak into the user's channel")
        out[m] = signal / (float(np.sum(rx)) - signal + s2)
    return out


def orthogonality_residual(beamformers, channels, eps: float = 1e-300) -> float:
    """Max of ``|h_mᴴ w_{m,k}| / (‖h_m‖‖w_{m,k}‖)`` over shaping columns ``k >= 2``."""
    worst = 0.0
    for w, h in zip(beamformers, channels):
        w = np.asarray(w)
        hn = np.linalg.norm(h)
        for k in range(1, w.shape[1]):
            wn = np.linalg.norm(w[:, k])
            if wn == 0.0:
                continue
            worst = max(worst, abs(np.vdot(h, w[:, k])) / (hn * wn + eps))
    return worst


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def solution_to_json(sol: ReelBfSolution) -> dict:
    doc = {
        "K": sol.K,
        "power": sol.power,
        "sdp_bound": sol.sdp_bound,
        "users": [
            {"W": encode_complex(u.W), "alpha": u.alpha, "beta": encode_complex(u.beta),
             "Omega": encode_complex(u.omega), "R": u.R}
            for u in sol.users
        ],
    }
    if sol.profile is not None:
        doc["rank_profile"] = {
            "ranks": sol.profile.ranks, "sum_sq": sol.profile.sum_sq, "bound": sol.profile.bound,
            "certified_lemma5": sol.profile.certified_lemma5,
        }
    return doc


def _matrix(data, rows: int, cols: int) -> np.ndarray:
    if cols == 0 or rows == 0:
        return np.zeros((rows, cols), dtype=complex)
    return decode_complex(data).reshape(rows, cols)


def solution_from_json(doc: dict) -> ReelBfSolution:
    try:
        K = int(doc["K"])
        users = []
        for u in doc["users"]:
            W = decode_complex(u["W"])
            if W.ndim != 2:
                raise InvalidInputError("W must be a matrix")
            n = W.shape[0]
            users.append(UserBeams(W, float(u["alpha"]), _matrix(u["beta"], n - 1, 1).reshape(-1),
                                   _matrix(u["Omega"], n - 1, K - 1), int(u["R"])))
        profile = None
        if "rank_profile" in doc:
            rp = doc["rank_profile"]
            profile = RankProfile(list(rp["ranks"]), int(rp["sum_sq"]), int(rp["bound"]),
                                  certified_lemma5=bool(rp["certified_lemma5"]))
        return ReelBfSolution(K, users, float(doc["power"]), float(doc["sdp_bound"]), profile)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed solution document: {exc}") from exc
