"""Rotating-frame master-equation generator, built two independent ways.

``build_generator`` assembles the full 16x16 Lindblad superoperator from
operators; ``reduced_rhs`` evaluates the closed seven-element equations for
populations and the coherences rho42, rho43, rho32 written out by hand. The
two must agree on the subspace where the untracked coherences (rho21, rho31,
rho41 and conjugates) vanish, which the generator leaves invariant.

Vectorization is column stacking: ``vec(rho)[i + 4*j] == rho[i, j]``, so
``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np

from .model import ALL_TRANSITIONS, SystemConfig, TransitionId

DIM = 4
IDENTITY = np.eye(DIM, dtype=complex)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


def sigma(j: int, k: int) -> np.ndarray:
    """Atomic operator |j><k| with 1-based level labels."""
    op = np.zeros((DIM, DIM), dtype=complex)
    op[j - 1, k - 1] = 1.0
    return op


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape(DIM, DIM, order="F")


def left(A: np.ndarray) -> np.ndarray:
    """Superoperator of X -> A X."""
    return np.kron(IDENTITY, A)


def right(B: np.ndarray) -> np.ndarray:
    """Superoperator of X -> X B."""
    return np.kron(B.T, IDENTITY)


def commutator_superop(H: np.ndarray) -> np.ndarray:
    """Superoperator of X -> -i[H, X]."""
    return -1j * (left(H) - right(H))


def dissipator_superop(A: np.ndarray) -> np.ndarray:
    """Superoperator of X -> A X A^dag - {A^dag A, X}/2."""
    AdA = A.conj().T @ A
    return np.kron(A.conj(), A) - 0.5 * (left(AdA) + right(AdA))


class DensityMatrixError(ValueError):
    pass


@dataclass(frozen=True)
class DensityMatrix:
    """4x4 rotating-frame atomic state; invariants are checked on construction."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (DIM, DIM):
            raise DensityMatrixError(f"expected a 4x4 matrix, got shape {rho.shape}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm >= HERMITIAN_TOL:
            raise DensityMatrixError(f"not Hermitian (max deviation {herm:.3e})")
        tr = np.trace(rho)
        if abs(tr - 1.0) >= TRACE_TOL:
            raise DensityMatrixError(f"trace {tr.real:.15g} differs from 1")
        lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if lam < -PSD_TOL:
            raise DensityMatrixError(f"not positive semidefinite (min eigenvalue {lam:.3e})")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def __getitem__(self, jk):
        j, k = jk
        return self.rho[j - 1, k - 1]

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()

    @classmethod
    def ground(cls) -> DensityMatrix:
        return cls(sigma(1, 1))

    @classmethod
    def gibbs(cls, H: np.ndarray, T: float) -> DensityMatrix:
        """Thermal state of a diagonal Hamiltonian; T = 0 gives the ground level."""
        e = np.real(np.diag(H))
        if T == 0:
            w = (e == e.min()).astype(float)
        else:
            w = np.exp(-(e - e.min()) / T)
        return cls(np.diag(w / w.sum()).astype(complex))


@dataclass(frozen=True)
class ReducedState:
    """Tracked elements: populations plus the coherences rho42, rho43, rho32.

    Also used for time derivatives of those elements, in which case the
    populations need not sum to one.
    """

    rho11: float
    rho22: float
    rho33: float
    rho44: float
    rho42: complex
    rho43: complex
    rho32: complex

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=complex)

    @classmethod
    def from_array(cls, a) -> ReducedState:
        a = np.asarray(a, dtype=complex)
        return cls(*(float(x.real) for x in a[:4]), *(complex(x) for x in a[4:]))

    def populations(self) -> np.ndarray:
        return np.array([self.rho11, self.rho22, self.rho33, self.rho44])


def embed(state: ReducedState, *, as_state: bool = True) -> np.ndarray | DensityMatrix:
    """Full 4x4 matrix with the untracked coherences set to zero.

    Returns a validated :class:`DensityMatrix` when ``as_state``; otherwise the
    raw array (use this for derivatives).
    """
    rho = np.diag(state.populations()).astype(complex)
    for (j, k), v in (((4, 2), state.rho42), ((4, 3), state.rho43), ((3, 2), state.rho32)):
        rho[j - 1, k - 1] = v
        rho[k - 1, j - 1] = np.conj(v)
    if not as_state:
        return rho
    total = state.populations().sum()
    if abs(total - 1.0) >= TRACE_TOL:
        raise DensityMatrixError(f"populations sum to {total:.15g}, not 1")
    return DensityMatrix(rho)


def project(rho) -> ReducedState:
    m = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return ReducedState(
        float(m[0, 0].real), float(m[1, 1].real), float(m[2, 2].real), float(m[3, 3].real),
        complex(m[3, 1]), complex(m[3, 2]), complex(m[2, 1]))


def build_hamiltonian(config: SystemConfig) -> np.ndarray:
    """Time-independent rotating-frame Hamiltonian H_A - H' + H'_{A-L}.

    The frame is generated by H' = -wL42 |2><2| - wL43 |3><3|, which lifts
    levels 2 and 3 by the laser frequencies so that rho42 and rho43 rotate at
    the detunings w42 - wL42 and w43 - wL43.
    """
    w1, w2, w3, w4 = config.omega
    wl42, wl43 = config.laser_freq
    r42, r43 = config.rabi
    H = np.diag([w1, w2 + wl42, w3 + wl43, w4]).astype(complex)
    H[3, 1] = r42
    H[1, 3] = np.conj(r42)
    H[3, 2] = r43
    H[2, 3] = np.conj(r43)
    return H


def lab_hamiltonian(config: SystemConfig) -> np.ndarray:
    """Bare atomic Hamiltonian H_A (unchanged by the rotating frame)."""
    return np.diag(config.omega).astype(complex)


def drive_hamiltonian(config: SystemConfig, beam: int) -> np.ndarray:
    """Rotating-frame coupling of one laser beam: 1 -> the 4<->2 beam, 2 -> the 4<->3 beam."""
    lower = {1: 2, 2: 3}[beam]
    V = config.rabi[beam - 1] * sigma(4, lower)
    return V + V.conj().T


@dataclass(frozen=True)
class TransitionRates:
    transition: TransitionId
    frequency: float
    occupation: float
    emission: float  # beta+ = (n + 1) gamma
    absorption: float  # beta- = n gamma

    def superop(self) -> np.ndarray:
        down, up = _unit_dissipators(self.transition.upper, self.transition.lower)
        return self.emission * down + self.absorption * up


@lru_cache(maxsize=None)
def _unit_dissipators(upper: int, lower: int) -> tuple[np.ndarray, np.ndarray]:
    # config-independent; cached read-only
    down = dissipator_superop(sigma(lower, upper))
    up = dissipator_superop(sigma(upper, lower))
    down.setflags(write=False)
    up.setflags(write=False)
    return down, up


def transition_rates(config: SystemConfig) -> dict[TransitionId, TransitionRates]:
    out = {}
    for t in ALL_TRANSITIONS:
        g = config.decay_rate(t)
        n = config.occupation(t)
        out[t] = TransitionRates(t, config.transition_frequency(t), n, (n + 1.0) * g, n * g)
    return out


@dataclass(frozen=True)
class LindbladGenerator:
    config: SystemConfig
    superop: np.ndarray
    hamiltonian: np.ndarray
    dissipators: dict  # TransitionId -> TransitionRates
    dissipator_superops: dict  # TransitionId -> 16x16 matrix

    def apply(self, rho) -> np.ndarray:
        m = rho.rho if isinstance(rho, DensityMatrix) else rho
        return unvec(self.superop @ vec(m))

    def dissipator(self, t: TransitionId) -> np.ndarray:
        return self.dissipator_superops[t]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.superop, 2))


def build_generator(config: SystemConfig) -> LindbladGenerator:
    H = build_hamiltonian(config)
    rates = transition_rates(config)
    parts = {t: r.superop() for t, r in rates.items()}
    L = commutator_superop(H)
    for t in ALL_TRANSITIONS:
        L = L + parts[t]
    for m in (L, H, *parts.values()):
        m.setflags(write=False)
    return LindbladGenerator(config, L, H, rates, parts)


def reduced_rhs(config: SystemConfig, state: ReducedState) -> ReducedState:
    """Time derivative of the tracked elements from the closed equations."""
    rates = {t.label: r for t, r in transition_rates(config).items()}
    p = {1: state.rho11, 2: state.rho22, 3: state.rho33, 4: state.rho44}
    rho = {(4, 2): state.rho42, (4, 3): state.rho43, (3, 2): state.rho32}
    rho[(2, 4)] = np.conj(state.rho42)
    rho[(3, 4)] = np.conj(state.rho43)
    rho[(2, 3)] = np.conj(state.rho32)
    # rabi frequencies carry either index order
    rabi = {"42": config.rabi[0], "24": config.rabi[0], "43": config.rabi[1], "34": config.rabi[1]}
    w = config.omega
    wl42, wl43 = config.laser_freq

    def bp(lp):
        return rates[lp].emission

    def bm(lp):
        return rates[lp].absorption

    def Gamma(j, k):
        # net decay j -> k through the reservoir
        return bp(f"{j}{k}") * p[j] - bm(f"{j}{k}") * p[k]

    def Upsilon(j, k):
        return 1j * rabi[f"{j}{k}"] * (rho[(j, k)] - rho[(k, j)])

    def alpha(j, k):
        return 1j * rabi[f"{j}{k}"] * (p[j] - p[k])

    def eta(j, k, l):
        return 1j * rabi[f"{j}{k}"] * rho[(k, l)]

    d11 = Gamma(2, 1) + Gamma(3, 1)
    d22 = Gamma(4, 2) - Gamma(2, 1) - Upsilon(4, 2)
    d33 = Gamma(4, 3) - Gamma(3, 1) - Upsilon(4, 3)
    d44 = -Gamma(4, 3) - Gamma(4, 2) + Upsilon(4, 2) + Upsilon(4, 3)

    d42 = (-1j * ((w[3] - w[1]) - wl42) * rho[(4, 2)] + alpha(4, 2) - eta(4, 3, 2)
           - 0.5 * (bp("42") + bm("42") + bp("43") + bp("21")) * rho[(4, 2)])
    d43 = (-1j * ((w[3] - w[2]) - wl43) * rho[(4, 3)] + alpha(4, 3) - eta(4, 2, 3)
           - 0.5 * (bp("43") + bm("43") + bp("42") + bp("31")) * rho[(4, 3)])
    # Second drive term is conj(eta(3,4,2)) with rho42 kept unconjugated,
    # i.e. -i*rabi34*rho42; the fully conjugated form would couple to rho24.
    d32 = (-1j * ((w[2] - w[1]) - (wl42 - wl43)) * rho[(3, 2)]
           - np.conj(eta(2, 4, 3)) - 1j * rabi["34"] * rho[(4, 2)]
           - 0.5 * (bp("31") + bp("21") + bm("43") + bm("42")) * rho[(3, 2)])

    return ReducedState(float(np.real(d11)), float(np.real(d22)), float(np.real(d33)),
                        float(np.real(d44)), complex(d42), complex(d43), complex(d32))
