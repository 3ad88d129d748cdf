"""Monte Carlo photon counting on top of the switch model.

Each (setting, repetition) window draws from its own counter-based stream
derived from the master seed, so results do not depend on execution order
and a threaded run reproduces a serial one bit for bit.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .engine import (DrivePulse, SwitchConfig, applied_phases, detection_probabilities,
                     jones_vector)

log = logging.getLogger(__name__)

DEFAULT_SEED = 20_200_917
TARGET_RATE = 25.1  # detections/s at the constructive output
TARGET_VISIBILITY = 0.9763
DEFAULT_EFFICIENCY = 0.15
DEFAULT_GATE_WIDTH = 100e-9

_SWEEP, _SCAN = 0, 1


def calibrated_pair_rate(rate: float = TARGET_RATE, efficiency: float = DEFAULT_EFFICIENCY,
                         loss_db: float = 5.0) -> float:
    """Heralded pair rate giving ``rate`` dark-free detections/s at a constructive output."""
    return rate / (efficiency * 10.0 ** (-loss_db / 10.0))


def calibrated_dark_rate(visibility: float = TARGET_VISIBILITY,
                         efficiency: float = DEFAULT_EFFICIENCY, loss_db: float = 5.0,
                         gate_width: float = DEFAULT_GATE_WIDTH,
                         heralding: float = 1.0) -> float:
    """In-gate dark rate that limits the raw fringe visibility to ``visibility``.

    With signal ``s`` per herald at the bright port and floor ``b`` per gate
    on each detector, the visibility is ``s / (s + 2b)``.
    """
    signal = heralding * efficiency * 10.0 ** (-loss_db / 10.0)
    floor = signal * (1.0 - visibility) / (2.0 * visibility)
    return floor / gate_width


CALIBRATED_PAIR_RATE = calibrated_pair_rate()
CALIBRATED_DARK_RATE = calibrated_dark_rate()


@dataclass(frozen=True)
class SourceModel:
    """Heralded single photons; ``trigger_rate`` defaults to the pair rate."""

    heralded_pair_rate: float = CALIBRATED_PAIR_RATE
    trigger_rate: float | None = None

    def __post_init__(self):
        if self.heralded_pair_rate < 0:
            raise ValueError("heralded_pair_rate must be >= 0")
        if self.trigger_rate is not None:
            if self.trigger_rate < 0:
                raise ValueError("trigger_rate must be >= 0")
            if self.heralded_pair_rate > self.trigger_rate:
                raise ValueError("heralded_pair_rate cannot exceed trigger_rate")

    @property
    def triggers(self) -> float:
        return self.heralded_pair_rate if self.trigger_rate is None else self.trigger_rate

    @property
    def heralding(self) -> float:
        t = self.triggers
        return self.heralded_pair_rate / t if t > 0 else 0.0


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = DEFAULT_EFFICIENCY
    dark_rate: float = CALIBRATED_DARK_RATE
    gate_width: float = DEFAULT_GATE_WIDTH
    paired_with_trigger: bool = True

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if self.dark_rate < 0:
            raise ValueError(f"dark_rate must be >= 0, got {self.dark_rate}")
        if self.gate_width <= 0:
            raise ValueError(f"gate_width must be > 0, got {self.gate_width}")

    def dark_mean(self, heralds: float, integration_time: float) -> float:
        if self.paired_with_trigger:
            return self.dark_rate * self.gate_width * heralds
        return self.dark_rate * integration_time


def default_voltages() -> tuple:
    return tuple(0.5 * k for k in range(17))


@dataclass(frozen=True)
class RunPlan:
    voltages: tuple = field(default_factory=default_voltages)
    repetitions: int = 20
    integration_time: float = 10.0
    seed: int = DEFAULT_SEED
    input_state: object = "H"
    pulse_delay: float = 0.0
    redraw_kl: bool = False
    timing_jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "voltages", tuple(float(v) for v in self.voltages))
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if not self.integration_time > 0:
            raise ValueError(f"integration_time must be > 0, got {self.integration_time}")
        if self.timing_jitter < 0:
            raise ValueError("timing_jitter must be >= 0")
        jones_vector(self.input_state)


@dataclass(frozen=True)
class ExperimentResult:
    kind: str
    settings: tuple
    mean_c1: tuple
    std_c1: tuple
    mean_c2: tuple
    std_c2: tuple
    p1_analytic: tuple
    p2_analytic: tuple
    phi_cw: tuple
    phi_ccw: tuple
    repetitions: int
    integration_time: float
    visibility: float | None = None
    visibility_stderr: float | None = None
    extinction_db: float | None = None
    fit: "FringeFit | None" = None
    fit_error: str | None = None

    @property
    def v_pi_fit(self):
        return None if self.fit is None else self.fit.v_pi


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FringeFit:
    v_pi: float
    visibility: float
    offset: float
    amplitude: float
    residual_norm: float


def stream(seed: int, tag: int, setting: int, repetition: int) -> np.random.Generator:
    """Independent Philox stream for one measurement window."""
    ss = np.random.SeedSequence(seed, spawn_key=(tag, setting, repetition))
    return np.random.Generator(np.random.Philox(ss))


def _pair(detectors):
    if isinstance(detectors, DetectorModel):
        return detectors, detectors
    d1, d2 = detectors
    return d1, d2


def simulate_window(probs, source: SourceModel, detectors, integration_time: float,
                    rng: np.random.Generator) -> tuple:
    """Counts (c1, c2) registered in one integration window."""
    p1, p2 = (float(p) for p in probs)
    if p1 < 0 or p2 < 0 or p1 + p2 > 1 + 1e-12:
        raise ValueError(f"invalid detection probabilities ({p1}, {p2})")
    d1, d2 = _pair(detectors)
    heralds = int(rng.poisson(source.triggers * integration_time))
    q1 = source.heralding * d1.efficiency * p1
    q2 = source.heralding * d2.efficiency * p2
    c1, c2, _ = rng.multinomial(heralds, [q1, q2, max(0.0, 1.0 - q1 - q2)])
    darks = rng.poisson([d1.dark_mean(heralds, integration_time),
                         d2.dark_mean(heralds, integration_time)])
    return int(c1 + darks[0]), int(c2 + darks[1])


def _stats(counts):
    arr = np.asarray(counts, dtype=float)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def _run_setting(args):
    (tag, index, voltage, delay, plan, source, detectors, config) = args
    jones = jones_vector(plan.input_state)
    c1s, c2s = [], []
    for rep in range(plan.repetitions):
        rng = stream(plan.seed, tag, index, rep)
        cfg = config
        if plan.redraw_kl:
            cfg = config.with_(mzs_phase_kl=float(rng.uniform(0.0, 2 * math.pi)))
        offset = float(rng.normal(0.0, plan.timing_jitter)) if plan.timing_jitter > 0 else 0.0
        phases = applied_phases(DrivePulse(voltage, delay + offset, config.pulse_width), config)
        probs = detection_probabilities(jones, phases, cfg, include_loss=True)
        c1, c2 = simulate_window(probs, source, detectors, plan.integration_time, rng)
        c1s.append(c1)
        c2s.append(c2)
    nominal = applied_phases(DrivePulse(voltage, delay, config.pulse_width), config)
    p1, p2 = detection_probabilities(jones, nominal, config)
    return (*_stats(c1s), *_stats(c2s), p1, p2, nominal.phi_cw, nominal.phi_ccw)


def _run(tag, settings, plan, source, detectors, config, workers):
    jobs = []
    for i, s in enumerate(settings):
        voltage, delay = s
        jobs.append((tag, i, voltage, delay, plan, source, detectors, config))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_setting, jobs))
    else:
        rows = [_run_setting(j) for j in jobs]
    return [tuple(col) for col in zip(*rows)] if rows else [()] * 8


def run_voltage_sweep(plan: RunPlan, source: SourceModel | None = None, detectors=None,
                      config: SwitchConfig | None = None, workers: int = 1) -> ExperimentResult:
    source = source or SourceModel()
    detectors = detectors or DetectorModel()
    config = config or SwitchConfig()
    settings = [(v, plan.pulse_delay) for v in plan.voltages]
    m1, s1, m2, s2, p1, p2, pcw, pccw = _run(_SWEEP, settings, plan, source, detectors, config, workers)
    vis, se = sweep_visibility(m1, m2, s1, s2, plan.repetitions)
    fit, err = None, None
    try:
        fit = fit_fringe(plan.voltages, m1)
    except FitError as exc:
        err = str(exc)
        log.warning("fringe fit failed: %s", exc)
    return ExperimentResult(
        "voltage_sweep", plan.voltages, m1, s1, m2, s2, p1, p2, pcw, pccw,
        plan.repetitions, plan.integration_time, vis, se, extinction_ratio_db(vis), fit, err)


def run_delay_scan(delays, voltage: float, plan: RunPlan, config: SwitchConfig | None = None,
                   source: SourceModel | None = None, detectors=None,
                   workers: int = 1) -> ExperimentResult:
    source = source or SourceModel()
    detectors = detectors or DetectorModel()
    config = config or SwitchConfig()
    delays = tuple(float(d) for d in delays)
    settings = [(float(voltage), d) for d in delays]
    m1, s1, m2, s2, p1, p2, pcw, pccw = _run(_SCAN, settings, plan, source, detectors, config, workers)
    return ExperimentResult("delay_scan", delays, m1, s1, m2, s2, p1, p2, pcw, pccw,
                            plan.repetitions, plan.integration_time)


def visibility(c1: float, c2: float) -> float:
    total = c1 + c2
    if total <= 0:
        raise ValueError("visibility undefined: no counts on either detector")
    return (c1 - c2) / total


def extinction_ratio_db(v: float) -> float:
    """10 log10((1+v)/(1-v)); infinite at v = +-1."""
    if v is None:
        return None
    if not -1.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [-1, 1], got {v}")
    if v == 1.0:
        return math.inf
    if v == -1.0:
        return -math.inf
    return 10.0 * math.log10((1.0 + v) / (1.0 - v))


def sweep_visibility(mean_c1, mean_c2, std_c1=None, std_c2=None, repetitions=None) -> tuple:
    """Average contrast at the two fringe extremes, with its standard error.

    Extremes are the settings with the largest and smallest ``c1 - c2``;
    selecting on ``c1`` alone lets noise pick a shoulder point of the fringe.
    The error propagates the standard error of each mean count and is None
    when no spread information is given.
    """
    c1 = np.asarray(mean_c1, dtype=float)
    c2 = np.asarray(mean_c2, dtype=float)
    if c1.size == 0:
        return None, None
    hi, lo = int(np.argmax(c1 - c2)), int(np.argmin(c1 - c2))
    points = [(hi, 1.0)] if hi == lo else [(hi, 1.0), (lo, -1.0)]
    values, variances = [], []
    for i, sign in points:
        a, b = c1[i], c2[i]
        values.append(sign * visibility(a, b))
        if std_c1 is not None and repetitions:
            sa = std_c1[i] / math.sqrt(repetitions)
            sb = std_c2[i] / math.sqrt(repetitions)
            t2 = (a + b) ** 2
            variances.append((2 * b / t2 * sa) ** 2 + (2 * a / t2 * sb) ** 2)
    v = float(sum(values) / len(values))
    se = float(math.sqrt(sum(variances)) / len(points)) if variances else None
    return v, se


def _profile(v, y, v_pi):
    """Best (A, B, residual) of y = A cos^2(pi v / (2 v_pi)) + B for fixed v_pi."""
    x = np.cos(np.pi * v / (2.0 * v_pi)) ** 2
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.linalg.norm(design @ coef - y))
    return float(coef[0]), float(coef[1]), resid


def fit_fringe(voltages, counts=None, v_pi_range=(1.0, 10.0), grid_points: int = 901) -> FringeFit:
    """Least-squares fringe fit of D1 counts against drive voltage.

    Accepts an :class:`ExperimentResult` or explicit ``(voltages, counts)``.
    Coarse grid over ``v_pi`` (amplitude and offset solved linearly at each
    point), then bounded scalar refinement around the best grid point.
    """
    if isinstance(voltages, ExperimentResult):
        voltages, counts = voltages.settings, voltages.mean_c1
    v = np.asarray(voltages, dtype=float)
    y = np.asarray(counts, dtype=float)
    if np.unique(v).size < 5:
        raise FitError(f"need at least 5 distinct voltages, got {np.unique(v).size}")
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.abs(y).max())):
        raise FitError("degenerate data: counts do not vary with voltage")
    grid = np.linspace(*v_pi_range, grid_points)
    resid = np.array([_profile(v, y, g)[2] for g in grid])
    k = int(np.argmin(resid))
    step = grid[1] - grid[0]
    lo, hi = max(v_pi_range[0], grid[k] - step), min(v_pi_range[1], grid[k] + step)
    opt = minimize_scalar(lambda g: _profile(v, y, g)[2], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    v_pi = float(opt.x) if opt.fun <= resid[k] else float(grid[k])
    a, b, r = _profile(v, y, v_pi)
    if a <= 0:
        raise FitError(f"fit found no fringe (amplitude {a:.4g})")
    if np.ptp(v) < v_pi:
        raise FitError(f"voltage span {np.ptp(v):.3g} V is less than half a fringe period ({v_pi:.3g} V)")
    return FringeFit(v_pi, a / (a + 2.0 * b), b, a, r)


def expected_rate(source: SourceModel, detectors, config: SwitchConfig) -> float:
    """Mean D1 detections/s with constructive interference at D1."""
    d1, _ = _pair(detectors)
    loss = config.arm_losses_db[0]
    signal = source.heralded_pair_rate * 10.0 ** (-loss / 10.0) * d1.efficiency
    return signal + d1.dark_mean(source.triggers, 1.0)
