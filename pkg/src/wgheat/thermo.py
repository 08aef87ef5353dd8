"""Energy bookkeeping of a steady state: heat currents, laser power, engine metrics.

Sign conventions: ``J_Wm`` is heat flowing *into* reservoir m and ``J_Lm``
is energy flowing *into* laser beam m (beam 1 drives 4<->2, beam 2 drives
4<->3). The corresponding inflows into the atom are their negatives. All
traces use the bare atomic Hamiltonian against the rotating-frame state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .generator import (DensityMatrix, LindbladGenerator, build_generator, drive_hamiltonian,
                        lab_hamiltonian, transition_rates, unvec, vec)
from .model import ALL_TRANSITIONS, SystemConfig
from .solver import SteadyStateReport, steady_state

ROUTE_TOL = 1e-10
BALANCE_TOL = 1e-9
CARNOT_SLACK = 1e-9
ENGINE_THRESHOLD = 1e-12


class ThermoError(RuntimeError):
    pass


class UndefinedDerivativeError(ThermoError):
    pass


@dataclass(frozen=True)
class CurrentsReport:
    J_W1: float
    J_W2: float
    J_L1: float
    J_L2: float
    transitions: dict  # label -> omega_lp * Gamma_lp, energy carried down each transition

    @property
    def J_L(self) -> float:
        """Total energy flow into the two laser beams."""
        return self.J_L1 + self.J_L2

    @property
    def J_L_in(self) -> float:
        return -self.J_L

    @property
    def J_total(self) -> float:
        return self.J_W1 + self.J_W2 + self.J_L1 + self.J_L2

    def entropy_production(self, config: SystemConfig) -> float:
        """Sum_m J_Wm / T_m; requires both temperatures positive."""
        T1, T2 = config.temperature
        if T1 <= 0 or T2 <= 0:
            raise ValueError("entropy production needs T1, T2 > 0")
        return self.J_W1 / T1 + self.J_W2 / T2

    def as_dict(self) -> dict[str, float]:
        return {"J_W1": self.J_W1, "J_W2": self.J_W2, "J_L1": self.J_L1, "J_L2": self.J_L2,
                "J_L": self.J_L, "J_total": self.J_total}


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, SteadyStateReport):
        rho = rho.rho
    if isinstance(rho, DensityMatrix):
        return rho.rho
    return np.asarray(rho, dtype=complex)


def _trace_route(config: SystemConfig, rho: np.ndarray, gen: LindbladGenerator | None):
    gen = gen or build_generator(config)
    HA = lab_hamiltonian(config)
    inflow = {1: 0.0, 2: 0.0}
    for t in ALL_TRANSITIONS:
        inflow[t.reservoir] += np.trace(HA @ unvec(gen.dissipator(t) @ vec(rho))).real
    laser_in = []
    for beam in (1, 2):
        V = drive_hamiltonian(config, beam)
        laser_in.append((-1j * np.trace(HA @ (V @ rho - rho @ V))).real)
    return inflow[1], inflow[2], laser_in[0], laser_in[1]


def _closed_form_route(config: SystemConfig, rho: np.ndarray):
    rates = transition_rates(config)
    carried = {}
    inflow = {1: 0.0, 2: 0.0}
    for t, r in rates.items():
        j, k = t.upper - 1, t.lower - 1
        net = r.emission * rho[j, j].real - r.absorption * rho[k, k].real
        carried[t.label] = r.frequency * net
        inflow[t.reservoir] -= r.frequency * net
    laser_in = []
    for (j, k), rabi in (((3, 1), config.rabi[0]), ((3, 2), config.rabi[1])):
        upsilon = (1j * rabi * (rho[j, k] - rho[k, j])).real
        laser_in.append((config.omega[j] - config.omega[k]) * upsilon)
    return inflow[1], inflow[2], laser_in[0], laser_in[1], carried


def heat_currents(config: SystemConfig, rho_ss, gen: LindbladGenerator | None = None) -> CurrentsReport:
    """Reservoir heat currents and laser power flows of a state.

    Computed from the trace definitions and from the closed per-transition
    forms; the two must agree. Energy balance is enforced when ``rho_ss`` is
    a :class:`SteadyStateReport` that qualifies as steady.
    """
    rho = _as_matrix(rho_ss)
    a = _trace_route(config, rho, gen)
    *b, carried = _closed_form_route(config, rho)
    scale = max(1.0, *(abs(x) for x in a))
    diff = max(abs(x - y) for x, y in zip(a, b))
    if diff > ROUTE_TOL * scale:
        raise ThermoError(f"trace and closed-form currents disagree by {diff:.3e}")
    w1_in, w2_in, l1_in, l2_in = a
    report = CurrentsReport(-w1_in, -w2_in, -l1_in, -l2_in, carried)
    if isinstance(rho_ss, SteadyStateReport) and rho_ss.is_steady:
        bound = BALANCE_TOL * max(abs(report.J_W1), abs(report.J_W2), abs(report.J_L1),
                                  abs(report.J_L2), 1.0)
        if abs(report.J_total) > bound:
            raise ThermoError(f"energy balance violated: total {report.J_total:.3e}")
    return report


def effective_temperature(config: SystemConfig, rho_ss) -> float:
    """Temperature whose Gibbs ratio reproduces rho11/rho33.

    Returns ``inf`` for equal populations, a negative value for inversion
    (rho33 > rho11) and 0.0 when rho33 vanishes.
    """
    rho = _as_matrix(rho_ss)
    p1, p3 = rho[0, 0].real, rho[2, 2].real
    if p1 <= 0:
        raise ValueError(f"effective temperature needs rho11 > 0, got {p1:.3e}")
    if p3 <= 0:
        return 0.0
    log_ratio = math.log(p1 / p3)
    if log_ratio == 0.0:
        return math.inf
    return (config.omega[2] - config.omega[0]) / log_ratio


def steady_currents(config: SystemConfig) -> tuple[SteadyStateReport, CurrentsReport]:
    gen = build_generator(config)
    ss = steady_state(gen)
    return ss, heat_currents(config, ss, gen)


def default_step(rabi: float) -> float:
    return max(1e-4, 1e-3 * rabi)


def amplification_factors(config: SystemConfig, knob: str = "rabi42",
                          step: float | None = None) -> tuple[float, float]:
    """Transistor gains alpha_m = dJ_Wm / dJ_L_in by central differences in one Rabi frequency.

    ``J_L_in`` is the total laser power delivered to the atom. ``step`` is the
    absolute change of the Rabi frequency (default ``max(1e-4, 1e-3*rabi)``),
    clipped so the lower point stays non-negative.
    """
    if knob not in ("rabi42", "rabi43"):
        raise ValueError(f"knob must be rabi42 or rabi43, not {knob!r}")
    rabi = config.to_dict()[knob]
    delta = default_step(rabi) if step is None else step
    lo = max(rabi - delta, 0.0)
    hi = rabi + delta
    _, up = steady_currents(config.replace(**{knob: hi}))
    _, down = steady_currents(config.replace(**{knob: lo}))
    dJL = up.J_L_in - down.J_L_in
    if abs(dJL) < 1e-14:
        raise UndefinedDerivativeError(f"laser power does not change with {knob} (dJ_L = {dJL:.3e})")
    return (up.J_W1 - down.J_W1) / dJL, (up.J_W2 - down.J_W2) / dJL


@dataclass(frozen=True)
class EngineReport:
    power: float  # total power into the lasers, J_L1 + J_L2
    heat_in: float  # heat drawn from the reservoirs that supply it
    efficiency: float  # power / heat_in; nan when not an engine
    carnot: float  # 1 - T_cold / T_hot
    engine: bool

    def as_dict(self) -> dict[str, float]:
        return {"P": self.power, "Q_hot": self.heat_in, "eta": self.efficiency,
                "carnot": self.carnot, "engine": float(self.engine)}


def engine_metrics(config: SystemConfig, currents: CurrentsReport) -> EngineReport:
    """Work output and efficiency.

    Efficiency is defined here as laser output power over the heat drawn from
    the reservoirs with negative J_W (normally just the hot one).
    """
    T1, T2 = config.temperature
    t_hot, t_cold = max(T1, T2), min(T1, T2)
    carnot = 1.0 - t_cold / t_hot if t_hot > 0 else 0.0
    power = currents.J_L
    heat_in = max(-currents.J_W1, 0.0) + max(-currents.J_W2, 0.0)
    engine = power > ENGINE_THRESHOLD
    if engine and heat_in <= 0:
        raise ThermoError(f"power output {power:.3e} with no heat drawn from either reservoir")
    eff = power / heat_in if engine else math.nan
    return EngineReport(power, heat_in, eff, carnot, engine)
