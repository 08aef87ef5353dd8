"""Parameter sweeps over config fields and the figure presets built on them."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .generator import build_generator
from .model import (CONFIG_FIELDS, ConfigError, SystemConfig, fig2_config, fig3_config, fig4_config,
                    fig5_config, validate)
from .solver import SolverError, steady_state
from .thermo import (ThermoError, amplification_factors, effective_temperature, engine_metrics,
                     heat_currents)


class SweepError(RuntimeError):
    def __init__(self, message: str, first_failure: dict | None = None):
        self.first_failure = first_failure
        super().__init__(message)


def _entropy(ctx) -> float:
    T1, T2 = ctx["config"].temperature
    if T1 <= 0 or T2 <= 0:
        return math.nan
    return ctx["currents"].entropy_production(ctx["config"])


def _t_eff(ctx) -> float:
    try:
        return effective_temperature(ctx["config"], ctx["steady"])
    except ValueError:
        return math.nan


def _alpha(m: int) -> Callable:
    def get(ctx):
        key = ("alpha", ctx["alpha_knob"])
        if key not in ctx:
            ctx[key] = amplification_factors(ctx["config"], ctx["alpha_knob"])
        return ctx[key][m - 1]
    return get


def _pop(j: int) -> Callable:
    return lambda ctx: float(ctx["steady"].rho.rho[j - 1, j - 1].real)


OBSERVABLES: dict[str, Callable[[dict], float]] = {
    "J_W1": lambda c: c["currents"].J_W1,
    "J_W2": lambda c: c["currents"].J_W2,
    "J_L1": lambda c: c["currents"].J_L1,
    "J_L2": lambda c: c["currents"].J_L2,
    "J_L": lambda c: c["currents"].J_L,
    "J_total": lambda c: c["currents"].J_total,
    "P": lambda c: c["engine"].power,
    "Q_hot": lambda c: c["engine"].heat_in,
    "eta": lambda c: c["engine"].efficiency,
    "carnot": lambda c: c["engine"].carnot,
    "engine": lambda c: float(c["engine"].engine),
    "T_eff": _t_eff,
    "sigma": _entropy,
    "alpha1": _alpha(1),
    "alpha2": _alpha(2),
    "rho11": _pop(1),
    "rho22": _pop(2),
    "rho33": _pop(3),
    "rho44": _pop(4),
}


@dataclass(frozen=True)
class Axis:
    field: str
    values: tuple[float, ...]
    label: str | None = None
    scale: str | None = None  # "linear" | "log" when generated from a range

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.field not in CONFIG_FIELDS:
            raise ValueError(f"unknown sweep field {self.field!r}")
        if not self.values:
            raise ValueError(f"axis {self.field} has an empty grid")
        d = np.diff(self.values)
        if len(d) and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError(f"axis {self.field} grid is not strictly monotone")

    @classmethod
    def linear(cls, field, start, stop, num, label=None) -> Axis:
        return cls(field, tuple(np.linspace(start, stop, num)), label, "linear")

    @classmethod
    def log(cls, field, start, stop, num, label=None) -> Axis:
        return cls(field, tuple(np.geomspace(start, stop, num)), label, "log")

    @property
    def name(self) -> str:
        return self.label or self.field

    def resample(self, num: int) -> Axis:
        """Same range with ``num`` points; explicit grids cannot be resampled."""
        if self.scale == "linear":
            return Axis.linear(self.field, self.values[0], self.values[-1], num, self.label)
        if self.scale == "log":
            return Axis.log(self.field, self.values[0], self.values[-1], num, self.label)
        raise ValueError(f"axis {self.field} has an explicit grid")

    def to_dict(self) -> dict:
        d = {"field": self.field, "values": list(self.values)}
        if self.label:
            d["label"] = self.label
        if self.scale:
            d["scale"] = self.scale
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Axis:
        if "values" in d:
            return cls(d["field"], tuple(d["values"]), d.get("label"), d.get("scale"))
        make = {"linear": cls.linear, "log": cls.log}[d.get("scale", "linear")]
        return make(d["field"], d["start"], d["stop"], int(d["num"]), d.get("label"))


@dataclass(frozen=True)
class Variant:
    label: str
    overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepSpec:
    base: SystemConfig
    axis1: Axis
    axis2: Axis | None = None
    observables: tuple[str, ...] = ("J_W1", "J_W2", "J_L")
    variants: tuple[Variant, ...] = ()
    alpha_knob: str = "rabi42"
    name: str = "sweep"

    def __post_init__(self):
        object.__setattr__(self, "observables", tuple(self.observables))
        unknown = [o for o in self.observables if o not in OBSERVABLES]
        if unknown:
            raise ValueError(f"unknown observables {unknown}; choose from {sorted(OBSERVABLES)}")
        for v in self.variants:
            bad = set(v.overrides) - set(CONFIG_FIELDS)
            if bad:
                raise ValueError(f"variant {v.label!r} overrides unknown fields {sorted(bad)}")
        if self.alpha_knob not in ("rabi42", "rabi43"):
            raise ValueError("alpha_knob must be rabi42 or rabi43")

    @property
    def axes(self) -> tuple[Axis, ...]:
        return (self.axis1,) if self.axis2 is None else (self.axis1, self.axis2)

    @property
    def variant_fields(self) -> tuple[str, ...]:
        seen: list[str] = []
        for v in self.variants:
            seen += [k for k in v.overrides if k not in seen]
        return tuple(seen)

    def points(self) -> list[tuple[str | None, dict[str, float]]]:
        """Grid points in output order: variant, then axis1, then axis2."""
        variants = self.variants or (None,)
        out = []
        for var in variants:
            fixed = dict(var.overrides) if var else {}
            for x in self.axis1.values:
                if self.axis2 is None:
                    out.append((var.label if var else None, {**fixed, self.axis1.field: x}))
                else:
                    for y in self.axis2.values:
                        out.append((var.label if var else None,
                                    {**fixed, self.axis1.field: x, self.axis2.field: y}))
        return out

    def with_points(self, num: int) -> SweepSpec:
        return SweepSpec(self.base, self.axis1.resample(num),
                         self.axis2.resample(num) if self.axis2 else None,
                         self.observables, self.variants, self.alpha_knob, self.name)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"name": self.name, "base": self.base.to_dict(),
                             "axes": [a.to_dict() for a in self.axes],
                             "observables": list(self.observables)}
        if self.variants:
            d["variants"] = [{"label": v.label, "set": dict(v.overrides)} for v in self.variants]
        if self.alpha_knob != "rabi42":
            d["alpha_knob"] = self.alpha_knob
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SweepSpec:
        known = {"name", "base", "axes", "observables", "variants", "alpha_knob"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep spec keys {sorted(unknown)}")
        axes = [Axis.from_dict(a) for a in d["axes"]]
        if not 1 <= len(axes) <= 2:
            raise ValueError("a sweep needs one or two axes")
        return cls(
            base=SystemConfig.from_dict(d["base"]),
            axis1=axes[0],
            axis2=axes[1] if len(axes) == 2 else None,
            observables=tuple(d.get("observables", ("J_W1", "J_W2", "J_L"))),
            variants=tuple(Variant(v["label"], dict(v.get("set", {}))) for v in d.get("variants", ())),
            alpha_knob=d.get("alpha_knob", "rabi42"),
            name=d.get("name", "sweep"),
        )


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[dict]

    @property
    def param_columns(self) -> list[str]:
        cols = [a.name for a in self.spec.axes]
        return cols + [f for f in self.spec.variant_fields if f not in
                       {a.field for a in self.spec.axes}]

    @property
    def columns(self) -> list[str]:
        lead = ["variant"] if self.spec.variants else []
        return lead + self.param_columns + list(self.spec.observables) + ["residual"]

    @property
    def failed(self) -> list[dict]:
        return [r for r in self.rows if r["status"] != "ok"]

    def column(self, name: str, variant: str | None = None) -> np.ndarray:
        rows = self.rows if variant is None else [r for r in self.rows if r["variant"] == variant]
        return np.array([r["values"][name] for r in rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        w.writerow(cols)
        for r in self.rows:
            w.writerow([r["variant"] if c == "variant" else format_float(r["values"][c]) for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for r in self.rows:
            rows.append({
                "variant": r["variant"],
                "values": {k: _json_float(v) for k, v in r["values"].items()},
                "method": r["method"], "status": r["status"],
                "warnings": list(r["warnings"]), "error": r["error"],
            })
        return json.dumps({"spec": self.spec.to_dict(), "columns": self.columns, "rows": rows}, indent=1)


def format_float(x: float) -> str:
    """17 significant digits, enough to reproduce any double exactly."""
    return format(float(x), ".17g")


def _json_float(x: float):
    x = float(x)
    return x if math.isfinite(x) else None


def _evaluate(spec: SweepSpec, variant: str | None, params: dict[str, float]) -> dict:
    labels = {a.field: a.name for a in spec.axes}
    values = {labels.get(k, k): float(v) for k, v in params.items()}
    row = {"variant": variant, "values": values, "method": None, "status": "ok",
           "warnings": (), "error": None}
    nan_obs = {o: math.nan for o in spec.observables}
    try:
        config = spec.base.replace(**params)
        report = validate(config)
        row["warnings"] = report.warnings
        report.raise_if_fatal()
        gen = build_generator(config)
        ss = steady_state(gen)
        row["method"] = ss.method
        values["residual"] = ss.residual
        currents = heat_currents(config, ss, gen)
        ctx = {"config": config, "steady": ss, "currents": currents,
               "engine": engine_metrics(config, currents), "alpha_knob": spec.alpha_knob}
        for name in spec.observables:
            values[name] = float(OBSERVABLES[name](ctx))
        if not ss.is_steady:
            row["status"] = "failed"
            row["error"] = f"residual {ss.residual:.3e} does not meet the steady-state bound"
    except (ConfigError, SolverError, ThermoError, ValueError) as exc:
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
        for k, v in nan_obs.items():
            values.setdefault(k, v)
        values.setdefault("residual", math.nan)
    return row


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every grid point; failures are recorded per row.

    Points are independent, so ``workers > 1`` evaluates them on a thread
    pool; the row order is always the grid order.
    """
    pts = spec.points()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _evaluate(spec, *p), pts))
    else:
        rows = [_evaluate(spec, *p) for p in pts]
    if rows and all(r["status"] != "ok" for r in rows):
        raise SweepError(f"all {len(rows)} sweep points failed; first: {rows[0]['error']}", rows[0])
    return SweepResult(spec, rows)


# The fig3 Rabi range is a free choice. The lower end reaches the
# Omega -> 0 floor of the suppressed current (~1e-11).
FIG3_RABI_RANGE = (1e-6, 1.0)
FIG3_POINTS = 61


def figure_preset(name: str) -> SweepSpec:
    if name == "fig2":
        return SweepSpec(fig2_config(temp1=10.0, temp2=0.0), Axis.linear("temp1", 0.0, 10.0, 101, "T1"),
                         observables=("J_W1", "J_W2", "J_L"), name="fig2")
    if name == "fig3":
        lo, hi = FIG3_RABI_RANGE
        return SweepSpec(
            fig3_config(1.0, 1.0, 1.0, 10.0),
            Axis.log("rabi42", lo, hi, FIG3_POINTS, "Omega42"),
            Axis.log("rabi43", lo, hi, FIG3_POINTS, "Omega43"),
            observables=("J_W1", "J_W2", "J_L"),
            variants=(Variant("T1=1,T2=10", {"temp1": 1.0, "temp2": 10.0}),
                      Variant("T1=10,T2=1", {"temp1": 10.0, "temp2": 1.0})),
            name="fig3")
    if name == "fig4":
        return SweepSpec(fig4_config(0.1), Axis.log("rabi42", 1e-2, 1.0, 41, "Omega42"),
                         observables=("J_W1", "J_W2", "J_L1", "alpha1", "alpha2"), name="fig4")
    if name == "fig5":
        return SweepSpec(fig5_config(10.0), Axis.linear("temp1", 1.0, 10.0, 91, "T1"),
                         observables=("J_W1", "J_W2", "J_L", "P", "eta", "carnot", "engine"),
                         name="fig5")
    raise ValueError(f"unknown figure preset {name!r}; choose fig2, fig3, fig4 or fig5")


FIGURES: Sequence[str] = ("fig2", "fig3", "fig4", "fig5")
