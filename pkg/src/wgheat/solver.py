"""Steady states and time evolution of the rotating-frame generator."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .generator import DIM, DensityMatrix, LindbladGenerator, unvec, vec

TRACE_ROWS = tuple(j * (DIM + 1) for j in range(DIM))  # vec indices of rho_jj
CONDITION_LIMIT = 1e12
DEGENERACY_TOL = 1e-10
RESIDUAL_TOL = 1e-10
TRACE_DRIFT_TOL = 1e-10


class SolverError(RuntimeError):
    pass


class MultipleSteadyStatesError(SolverError):
    def __init__(self, sigma_min: float, sigma_next: float, norm: float):
        self.singular_values = (sigma_min, sigma_next)
        super().__init__(
            f"steady state is not unique: two smallest singular values "
            f"{sigma_min:.3e}, {sigma_next:.3e} (generator norm {norm:.3e})")


class NonConvergenceError(SolverError):
    def __init__(self, message: str, rate_norm: float):
        self.rate_norm = rate_norm
        super().__init__(f"{message} (|drho/dt| = {rate_norm:.3e})")


@dataclass(frozen=True)
class SteadyStateReport:
    rho: DensityMatrix
    residual: float
    method: str  # "linear" | "nullspace" | "evolved"
    singular_values: tuple[float, float]  # two smallest, ascending
    norm: float

    @property
    def is_steady(self) -> bool:
        return self.residual < RESIDUAL_TOL * max(1.0, self.norm)


def _finalize(gen: LindbladGenerator, v: np.ndarray, method: str, sv, norm) -> SteadyStateReport:
    rho = unvec(v)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = float(np.linalg.norm(gen.superop @ vec(rho)))
    report = SteadyStateReport(DensityMatrix(rho), residual, method, sv, norm)
    if method != "evolved" and not report.is_steady:
        raise SolverError(f"{method} solve left residual {residual:.3e}")
    return report


def _singular_values(gen: LindbladGenerator):
    U, s, Vh = np.linalg.svd(gen.superop)
    return s, Vh


def steady_state(gen: LindbladGenerator, method: str = "auto") -> SteadyStateReport:
    """Unit-trace null vector of the generator.

    ``auto`` solves the linear system with one population equation replaced
    by the trace condition and falls back to the SVD null vector when that
    system is ill-conditioned. ``linear`` and ``nullspace`` force one route.
    """
    if method not in ("auto", "linear", "nullspace"):
        raise ValueError(f"unknown steady-state method {method!r}")
    s, Vh = _singular_values(gen)
    norm = float(s[0])
    sv = (float(s[-1]), float(s[-2]))
    if sv[1] < DEGENERACY_TOL * max(norm, 1.0):
        raise MultipleSteadyStatesError(sv[0], sv[1], norm)

    if method in ("auto", "linear"):
        L = np.array(gen.superop)
        # Only population rows are linearly dependent (the trace functional
        # annihilates L), so the replaced row is chosen among those.
        row = min(TRACE_ROWS, key=lambda r: (abs(L[r, r]), r))
        L[row, :] = 0.0
        L[row, list(TRACE_ROWS)] = 1.0
        b = np.zeros(DIM * DIM, dtype=complex)
        b[row] = 1.0
        cond = np.linalg.cond(L)
        if cond <= CONDITION_LIMIT or method == "linear":
            v = np.linalg.solve(L, b)
            return _finalize(gen, v, "linear", sv, norm)

    v = Vh[-1].conj()
    v = v / sum(v[i] for i in TRACE_ROWS)
    return _finalize(gen, v, "nullspace", sv, norm)


@dataclass(frozen=True)
class EvolveOptions:
    t_final: float | None = None  # default 20 / relaxation_scale
    initial_step: float | None = None  # default 1 / |L|_2
    rtol: float = 1e-10
    rate_tol: float | None = None  # convergence threshold on |L vec(rho)|; None skips the check
    samples: int = 200
    max_halvings: int = 12

    def __post_init__(self):
        if self.t_final is not None and not self.t_final > 0:
            raise ValueError("t_final must be > 0")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("initial_step must be > 0")
        if not self.rtol > 0 or (self.rate_tol is not None and not self.rate_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), 4, 4)
    step: float
    final: DensityMatrix  # last sample, Hermitized and trace-normalized once
    rate_norm: float  # |L vec(rho)| at the endpoint


def rk4_step_matrix(L: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step for dv/dt = L v, as a matrix acting on v."""
    I = np.eye(L.shape[0], dtype=complex)
    k1 = L
    k2 = L @ (I + 0.5 * h * k1)
    k3 = L @ (I + 0.5 * h * k2)
    k4 = L @ (I + h * k3)
    return I + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate(L, v0, t_final, h, samples):
    n_steps = math.ceil(t_final / h)
    h = t_final / n_steps
    stride = max(1, n_steps // samples)
    P = rk4_step_matrix(L, h)
    P_stride = np.linalg.matrix_power(P, stride)
    times = [0.0]
    vs = [v0]
    v = v0
    done = 0
    while done + stride <= n_steps:
        v = P_stride @ v
        done += stride
        times.append(done * h)
        vs.append(v)
    rest = n_steps - done
    if rest:
        v = np.linalg.matrix_power(P, rest) @ v
        times.append(t_final)
        vs.append(v)
    return np.array(times), np.array(vs), h


def evolve(gen: LindbladGenerator, rho0: DensityMatrix, opts: EvolveOptions | None = None) -> Trajectory:
    """Fixed-step RK4 from ``rho0``, halving the step until the endpoint settles."""
    opts = opts or EvolveOptions()
    L = np.asarray(gen.superop)
    t_final = opts.t_final
    if t_final is None:
        t_final = 20.0 / relaxation_scale(gen)
    h = opts.initial_step or 1.0 / max(gen.norm, 1e-300)
    h = min(h, t_final)
    v0 = vec(rho0.rho)

    times, vs, h_used = _integrate(L, v0, t_final, h, opts.samples)
    for _ in range(opts.max_halvings):
        h *= 0.5
        t2, vs2, h2 = _integrate(L, v0, t_final, h, opts.samples)
        change = np.max(np.abs(vs2[-1] - vs[-1])) / max(np.max(np.abs(vs2[-1])), 1e-300)
        times, vs, h_used = t2, vs2, h2
        # Richardson estimate of the fine solution's error for a 4th-order method
        if change / 15.0 < opts.rtol:
            break
    else:
        raise NonConvergenceError("step halving did not settle the endpoint",
                                  float(np.linalg.norm(L @ vs[-1])))

    rate = float(np.linalg.norm(L @ vs[-1]))
    if opts.rate_tol is not None and rate > opts.rate_tol:
        raise NonConvergenceError(f"not stationary by t = {t_final:g}", rate)
    states = vs.reshape(len(times), DIM, DIM, order="C").transpose(0, 2, 1)
    drift = np.abs(np.trace(states, axis1=1, axis2=2) - np.trace(rho0.rho)).max()
    if drift > TRACE_DRIFT_TOL:
        raise SolverError(f"trace drifted by {drift:.3e} during integration")
    final = unvec(vs[-1])
    final = 0.5 * (final + final.conj().T)
    final = final / np.trace(final).real
    return Trajectory(times, states, h_used, DensityMatrix(final), rate)


def evolved_steady_state(gen: LindbladGenerator, rho0: DensityMatrix | None = None,
                         opts: EvolveOptions | None = None) -> SteadyStateReport:
    """Steady state as the long-time endpoint of :func:`evolve`."""
    traj = evolve(gen, rho0 or DensityMatrix.ground(), opts)
    s, _ = _singular_values(gen)
    return _finalize(gen, vec(traj.final.rho), "evolved", (float(s[-1]), float(s[-2])), float(s[0]))


def relaxation_scale(gen: LindbladGenerator) -> float:
    """Slowest nonzero decay rate, min |Re lambda| over the generator spectrum."""
    lam = np.linalg.eigvals(np.asarray(gen.superop))
    re = np.abs(lam.real)
    cutoff = 1e-10 * max(gen.norm, 1.0)
    nonzero = re[re > cutoff]
    if nonzero.size == 0:
        raise SolverError("generator has no dissipation: all eigenvalues have zero real part")
    return float(nonzero.min())
