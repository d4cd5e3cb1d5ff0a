"""Beamforming problem instances and their SDP relaxations.

A :class:`BeamformingProblem` holds per-user channels, noise powers and SINR
targets plus two families of extra quadratic constraints:

* joint rows ``sum_m A_m • X_m (sense) tau`` coupling all users, and
* individual groups ``lower <= C_m • X_m <= upper`` applied per user.

The scenario generators reproduce the experiment setups used for the
energy-harvesting, co-channel interference and relaxed-nulling studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .linalg import check_hermitian, herm, is_unitary
from .sdp import Constraint, DoubleSided, StandardSdp

# Energy-harvesting terminal directions (degrees) for the LoS study: 1.5 degree
# steps from -90, a gap around the user at broadside, then 2 .. 77.
EH_DIRECTIONS_DEG = tuple(
    [-90.0 + 1.5 * k for k in range(58)] + [-2.0] + [2.0 + 1.5 * k for k in range(51)]
)

USER_ANGLES_DEG = (-5.0, 10.0, 25.0)
COCHANNEL_ANGLES_DEG = (
    -89.375, -80.0, -70.625, -61.25, -51.875, -42.5, -33.125, -23.75, -14.375,
    2.0, 3.0, 17.0, 18.0, 34.375, 43.75, 53.125, 62.5, 71.875, 81.25,
)


@dataclass
class JointConstraint:
    matrices: list[np.ndarray]
    sense: str
    threshold: float
    label: str = ""


@dataclass
class IndividualConstraint:
    matrix: np.ndarray
    lower: float = 0.0
    upper: float = math.inf


@dataclass
class BeamformingProblem:
    channels: list[np.ndarray]
    noise_vars: np.ndarray
    sinr_targets: np.ndarray
    joint: list[JointConstraint] = field(default_factory=list)
    individual: list[list[IndividualConstraint]] = field(default_factory=list)

    def __post_init__(self):
        self.channels = [np.asarray(h, dtype=complex).reshape(-1) for h in self.channels]
        self.noise_vars = np.asarray(self.noise_vars, dtype=float).reshape(-1)
        self.sinr_targets = np.asarray(self.sinr_targets, dtype=float).reshape(-1)

    @property
    def M(self) -> int:
        return len(self.channels)

    @property
    def L(self) -> int:
        return len(self.joint)

    @property
    def P(self) -> int:
        return len(self.individual)

    @property
    def n_t(self) -> int:
        return self.channels[0].shape[0]

    def validate(self) -> None:
        if self.M < 1:
            raise InvalidInputError("at least one user is required")
        n = self.n_t
        if any(h.shape != (n,) for h in self.channels):
            raise InvalidInputError("all channels must have the same length")
        if any(np.linalg.norm(h) == 0 for h in self.channels):
            raise InvalidInputError("channel vectors must be nonzero")
        if self.noise_vars.shape != (self.M,) or self.sinr_targets.shape != (self.M,):
            raise InvalidInputError("need one noise variance and one SINR target per user")
        if np.any(self.sinr_targets <= 0) or not np.all(np.isfinite(self.sinr_targets)):
            raise InvalidInputError("SINR targets must be positive and finite")
        if np.any(self.noise_vars < 0):
            raise InvalidInputError("noise variances must be nonnegative")
        for i, row in enumerate(self.joint):
            if row.sense not in ("LE", "EQ", "GE"):
                raise InvalidInputError(f"joint row {i}: unknown sense {row.sense!r}")
            if len(row.matrices) != self.M:
                raise InvalidInputError(f"joint row {i}: need one matrix per user")
            for a in row.matrices:
                if check_hermitian(a).shape != (n, n):
                    raise InvalidInputError(f"joint row {i}: matrix shape mismatch")
        for p, group in enumerate(self.individual):
            if len(group) != self.M:
                raise InvalidInputError(f"individual group {p}: need one entry per user")
            for m, ent in enumerate(group):
                if check_hermitian(ent.matrix).shape != (n, n):
                    raise InvalidInputError(f"individual group {p}, user {m}: shape mismatch")
                if not (ent.lower <= 0.0 <= ent.upper):
                    raise InvalidInputError(f"individual group {p}, user {m}: need lower <= 0 <= upper")

    def with_sinr_targets(self, targets) -> "BeamformingProblem":
        return BeamformingProblem(self.channels, self.noise_vars, np.broadcast_to(targets, (self.M,)).copy(),
                                  self.joint, self.individual)


# ---------------------------------------------------------------------------
# SINR rows and steering vectors
# ---------------------------------------------------------------------------

def sinr_matrices(p: BeamformingProblem) -> list[JointConstraint]:
    """SINR constraints as ``sum_j A_mj • X_j >= sigma_m^2``."""
    if np.any(p.sinr_targets <= 0):
        raise InvalidInputError("SINR targets must be positive")
    rows = []
    for m, (h, g, s2) in enumerate(zip(p.channels, p.sinr_targets, p.noise_vars)):
        hh = np.outer(h, np.conj(h))
        mats = [hh / g if j == m else -hh for j in range(p.M)]
        rows.append(JointConstraint(mats, "GE", float(s2), label=f"sinr{m}"))
    return rows


def steering_vector(theta_deg: float, n_t: int) -> np.ndarray:
    """Half-wavelength ULA response ``[1, e^{jπ sinθ}, ..., e^{jπ(N-1) sinθ}]``."""
    if n_t < 1:
        raise InvalidInputError("n_t must be positive")
    n = np.arange(n_t)
    return np.exp(1j * np.pi * n * np.sin(np.deg2rad(theta_deg)))


def steering_derivatives(theta_deg: float, n_t: int) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives of the steering vector w.r.t. θ in radians."""
    th = np.deg2rad(theta_deg)
    n = np.arange(n_t)
    h = np.exp(1j * np.pi * n * np.sin(th))
    d1 = 1j * np.pi * n * np.cos(th)
    h1 = d1 * h
    h2 = (-1j * np.pi * n * np.sin(th) + d1 ** 2) * h
    return h1, h2


# ---------------------------------------------------------------------------
# SDP construction
# ---------------------------------------------------------------------------

def _build(p: BeamformingProblem, transform) -> StandardSdp:
    p.validate()
    n = p.n_t
    blocks = [n] * p.M
    objective = [transform(m, np.eye(n, dtype=complex)) for m in range(p.M)]
    constraints = []
    for row in sinr_matrices(p) + list(p.joint):
        coeffs = {m: transform(m, np.asarray(a, dtype=complex)) for m, a in enumerate(row.matrices)}
        constraints.append(Constraint(coeffs, row.sense, float(row.threshold), row.label))
    double = []
    for g, group in enumerate(p.individual):
        for m, ent in enumerate(group):
            double.append(DoubleSided(m, transform(m, np.asarray(ent.matrix, dtype=complex)),
                                      float(ent.lower), float(ent.upper), label=f"ind{g}:{m}"))
    return StandardSdp(blocks, objective, constraints, double)


def build_original_sdp(p: BeamformingProblem) -> StandardSdp:
    return _build(p, lambda m, a: a)


def build_rotated_sdp(p: BeamformingProblem, rotations) -> StandardSdp:
    """Same SDP in rotated coordinates: every coefficient ``A`` becomes ``Uᴴ A U``."""
    if len(rotations) != p.M:
        raise InvalidInputError("need one rotation per user")
    rots = [np.asarray(u, dtype=complex) for u in rotations]
    for m, u in enumerate(rots):
        if u.shape != (p.n_t, p.n_t) or not is_unitary(u, atol=1e-8):
            raise InvalidInputError(f"rotation {m} is not a {p.n_t}x{p.n_t} unitary matrix")

    def rotate(m, a):
        u = rots[m]
        r = herm(u) @ a @ u
        return 0.5 * (r + herm(r))

    return _build(p, rotate)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def rate_to_sinr(rate_bits: float) -> float:
    return 2.0 ** rate_bits - 1.0


def ostbc_sinr_target(rate_bits: float, code_rate: float = 1.0) -> float:
    """SINR needed for information rate ``rate_bits`` with a rate-``code_rate`` code."""
    if rate_bits <= 0 or not 0 < code_rate <= 1:
        raise InvalidInputError("need rate_bits > 0 and code_rate in (0, 1]")
    return 2.0 ** (rate_bits / code_rate) - 1.0


def complex_gaussian(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _eh_rows(targets, tau, n_users):
    rows = []
    for l, g in enumerate(targets):
        a = np.outer(g, np.conj(g))
        rows.append(JointConstraint([a] * n_users, "GE", tau, label=f"eh{l}"))
    return rows


def scenario_eh_los(L: int, n_t: int = 16, gamma_db: float = 0.0, tau_db: float = 10.0,
                    sigma2: float = 0.1) -> BeamformingProblem:
    """One user at broadside and ``L`` energy-harvesting terminals on the fixed direction list."""
    if not 0 <= L <= len(EH_DIRECTIONS_DEG):
        raise InvalidInputError(f"L must lie in [0, {len(EH_DIRECTIONS_DEG)}]")
    h = steering_vector(0.0, n_t)
    eh = [steering_vector(u, n_t) for u in EH_DIRECTIONS_DEG[:L]]
    return BeamformingProblem([h], [sigma2], [db_to_linear(gamma_db)], _eh_rows(eh, db_to_linear(tau_db), 1))


def scenario_rayleigh_eh(L: int, M: int = 1, n_t: int = 16, gamma_db: float = 0.0, tau_db: float = 10.0,
                         sigma2: float = 0.1, seed: int = 0) -> BeamformingProblem:
    if L < 0 or M < 1 or n_t < 1:
        raise InvalidInputError("counts must be positive")
    rng = np.random.default_rng(seed)
    users = [complex_gaussian(rng, n_t) for _ in range(M)]
    eh = [complex_gaussian(rng, n_t) for _ in range(L)]
    return BeamformingProblem(users, [sigma2] * M, [db_to_linear(gamma_db)] * M,
                              _eh_rows(eh, db_to_linear(tau_db), M))


def derivative_rows(theta_deg: float, n_t: int, n_users: int, tau: float, eps: float,
                    delta_curv: float, tag: str = "") -> list[JointConstraint]:
    """Cap, flat-slope and positive-curvature rows for the pattern at one angle."""
    h = steering_vector(theta_deg, n_t)
    h1, h2 = steering_derivatives(theta_deg, n_t)
    f0 = np.outer(h, np.conj(h))
    f1 = np.outer(h1, np.conj(h)) + np.outer(h, np.conj(h1))
    f2 = np.outer(h2, np.conj(h)) + 2.0 * np.outer(h1, np.conj(h1)) + np.outer(h, np.conj(h2))
    return [
        JointConstraint([f0] * n_users, "LE", tau, label=f"cap{tag}"),
        JointConstraint([f1] * n_users, "LE", eps, label=f"slope+{tag}"),
        JointConstraint([f1] * n_users, "GE", -eps, label=f"slope-{tag}"),
        JointConstraint([f2] * n_users, "GE", delta_curv, label=f"curv{tag}"),
    ]


def scenario_interference_derivative(n_t: int = 18, user_angles=USER_ANGLES_DEG,
                                     cochannel_angles=COCHANNEL_ANGLES_DEG, tau: float = 0.1,
                                     eps: float = 1e-5, delta_curv: float = 1e-8, gamma: float = 3.0,
                                     sigma2: float = 0.1, seed: int | None = None,
                                     perturb_deg: float = 0.25) -> BeamformingProblem:
    """LoS users with capped, locally-minimal interference at co-channel directions.

    With ``seed`` set, every angle is perturbed by an independent
    ``Uniform[-perturb_deg, perturb_deg]`` offset.
    """
    users = np.asarray(user_angles, dtype=float)
    co = np.asarray(cochannel_angles, dtype=float)
    if np.any(np.abs(np.concatenate([users, co])) > 90):
        raise InvalidInputError("angles must lie in [-90, 90] degrees")
    if seed is not None:
        rng = np.random.default_rng(seed)
        offs = rng.uniform(-perturb_deg, perturb_deg, size=users.size + co.size)
        users = users + offs[: users.size]
        co = co + offs[users.size:]
    M = users.size
    chans = [steering_vector(t, n_t) for t in users]
    joint = []
    for j, th in enumerate(co):
        joint += derivative_rows(th, n_t, M, tau, eps, delta_curv, tag=str(j))
    return BeamformingProblem(chans, [sigma2] * M, [gamma] * M, joint)


def relaxed_nulling_matrix(g: np.ndarray, varsigma: float) -> np.ndarray:
    g = np.asarray(g, dtype=complex).reshape(-1)
    return varsigma * np.eye(g.size) - np.outer(g, np.conj(g)) / np.vdot(g, g).real


def scenario_relaxed_nulling(L: int, M: int = 2, F: int = 10, P: int = 2, varsigma: float = 0.02,
                             interference_cap: float = 0.01, n_t: int = 16, gamma_db: float = 5.0,
                             tau_db: float = 10.0, sigma2: float = 0.1, seed: int = 0) -> BeamformingProblem:
    """EH terminals, capped co-channel users and relaxed nulling toward ``P`` more users."""
    if L < 0 or M < 1 or F < 0 or P < 0:
        raise InvalidInputError("counts must be nonnegative (M positive)")
    rng = np.random.default_rng(seed)
    users = [complex_gaussian(rng, n_t) for _ in range(M)]
    eh = [complex_gaussian(rng, n_t) for _ in range(L)]
    co = [complex_gaussian(rng, n_t) for _ in range(F)]
    nulls = [complex_gaussian(rng, n_t) for _ in range(P)]
    joint = _eh_rows(eh, db_to_linear(tau_db), M)
    for j, f in enumerate(co):
        a = np.outer(f, np.conj(f))
        joint.append(JointConstraint([a] * M, "LE", interference_cap, label=f"co{j}"))
    individual = [[IndividualConstraint(relaxed_nulling_matrix(g, varsigma), 0.0, math.inf)
                   for _ in range(M)] for g in nulls]
    return BeamformingProblem(users, [sigma2] * M, [db_to_linear(gamma_db)] * M, joint, individual)


SCENARIO_KINDS = ("LosEh", "RayleighEh", "InterferenceDerivative", "RelaxedNulling")


def build_scenario(kind: str, params: dict, seed: int | None = None) -> BeamformingProblem:
    """Dispatch a named scenario. ``rate`` in ``params`` overrides the SINR target."""
    params = dict(params)
    rate = params.pop("rate", None)
    if kind == "InterferenceDerivative":
        if rate is not None:
            params["gamma"] = rate_to_sinr(rate)
        elif "gamma_db" in params:
            params["gamma"] = db_to_linear(params.pop("gamma_db"))
        perturb = params.pop("perturb", True)
        return scenario_interference_derivative(seed=seed if perturb else None, **params)
    if rate is not None:
        params["gamma_db"] = 10.0 * math.log10(rate_to_sinr(rate))
    if kind == "LosEh":
        return scenario_eh_los(**params)
    if kind == "RayleighEh":
        return scenario_rayleigh_eh(seed=seed or 0, **params)
    if kind == "RelaxedNulling":
        return scenario_relaxed_nulling(seed=seed or 0, **params)
    raise InvalidInputError(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

def encode_complex(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise InvalidInputError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _bound(x, default):
    return default if x is None else float(x)


def problem_to_json(p: BeamformingProblem) -> dict:
    def fin(x):
        return float(x) if math.isfinite(x) else None

    return {
        "channels": [encode_complex(h) for h in p.channels],
        "noise_vars": [float(s) for s in p.noise_vars],
        "sinr_targets": [float(g) for g in p.sinr_targets],
        "joint": [
            {"matrices": [encode_complex(a) for a in row.matrices], "sense": row.sense,
             "threshold": float(row.threshold), "label": row.label}
            for row in p.joint
        ],
        "individual": [
            [{"matrix": encode_complex(e.matrix), "lower": fin(e.lower), "upper": fin(e.upper)} for e in group]
            for group in p.individual
        ],
    }


def problem_from_json(data: dict) -> BeamformingProblem:
    try:
        p = BeamformingProblem(
            channels=[decode_complex(h) for h in data["channels"]],
            noise_vars=data["noise_vars"],
            sinr_targets=data["sinr_targets"],
            joint=[JointConstraint([decode_complex(a) for a in r["matrices"]], r["sense"], float(r["threshold"]),
                                   r.get("label", "")) for r in data.get("joint", [])],
            individual=[[IndividualConstraint(decode_complex(e["matrix"]), _bound(e.get("lower"), -math.inf),
                                              _bound(e.get("upper"), math.inf)) for e in group]
                        for group in data.get("individual", [])],
        )
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed problem document: {exc}") from exc
    p.validate()
    return p
