"""Single-photon propagation through the polarization-independent Sagnac switch.

The closed-form path (:func:`output_state`, :func:`detection_probabilities`)
is what the experiment layer uses. :mod:`sagnac_switch.chain` rebuilds the
same answer by multiplying component matrices and serves as its oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .components import DEFAULT_GROUP_INDEX, fiber_delay
from .optics import ModeBasis, ModeState

TWO_PI = 2.0 * math.pi
NORM_TOL = 1e-12

OUTPUT_BASIS = ModeBasis.of("D1", "D2")

INPUT_STATES = {
    "H": (1.0, 0.0),
    "V": (0.0, 1.0),
    "D": (1 / math.sqrt(2), 1 / math.sqrt(2)),
    "A": (1 / math.sqrt(2), -1 / math.sqrt(2)),
}


@dataclass(frozen=True)
class SwitchConfig:
    """Physical parameters of the switch (SI units, radians).

    ``loss_d1_db`` / ``loss_d2_db`` override ``loop_loss_db`` for one output
    arm. ``pm2_drive_scale`` scales the phase of the second modulator
    relative to the first; 1.0 means both share one generator.
    """

    v_pi: float = 4.0
    pulse_width: float = 32e-9
    delay_length: float = 100.0
    group_index: float = DEFAULT_GROUP_INDEX
    mzs_phase_kl: float = 0.0
    loop_loss_db: float = 5.0
    short_arm_transit: float = 10e-9
    loss_d1_db: float | None = None
    loss_d2_db: float | None = None
    pm2_drive_scale: float = 1.0

    def __post_init__(self):
        if not self.v_pi > 0:
            raise ValueError(f"v_pi must be > 0, got {self.v_pi}")
        if not self.pulse_width > 0:
            raise ValueError(f"pulse_width must be > 0, got {self.pulse_width}")
        if self.delay_length < 0:
            raise ValueError(f"delay_length must be >= 0, got {self.delay_length}")
        if self.group_index < 1:
            raise ValueError(f"group_index must be >= 1, got {self.group_index}")
        for name in ("loop_loss_db", "loss_d1_db", "loss_d2_db"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        if self.short_arm_transit < 0:
            raise ValueError(f"short_arm_transit must be >= 0, got {self.short_arm_transit}")

    @property
    def arm_losses_db(self) -> tuple:
        d1 = self.loop_loss_db if self.loss_d1_db is None else self.loss_d1_db
        d2 = self.loop_loss_db if self.loss_d2_db is None else self.loss_d2_db
        return d1, d2

    def with_(self, **changes) -> "SwitchConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class DrivePulse:
    voltage: float
    delay: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"pulse width must be > 0, got {self.width}")


@dataclass(frozen=True)
class PassPhases:
    """Modulator phase seen by each counter-propagating pass, wrapped to [0, 2pi)."""

    phi_cw: float = 0.0
    phi_ccw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phi_cw", _wrap(self.phi_cw))
        object.__setattr__(self, "phi_ccw", _wrap(self.phi_ccw))

    @property
    def net(self) -> float:
        return self.phi_cw - self.phi_ccw


def _wrap(phi: float) -> float:
    w = math.fmod(float(phi), TWO_PI)
    if w < 0:
        w += TWO_PI
    # fmod of a value just below a multiple of 2pi can round up to 2pi
    return 0.0 if w >= TWO_PI else w


def jones_vector(spec) -> np.ndarray:
    """Normalized input Jones vector from a name (H, V, D, A) or an (alpha, beta) pair."""
    if isinstance(spec, str):
        try:
            spec = INPUT_STATES[spec.upper()]
        except KeyError:
            raise ValueError(f"unknown input state {spec!r}; expected one of H, V, D, A") from None
    vec = np.asarray(spec, dtype=complex).reshape(-1)
    if vec.shape != (2,):
        raise ValueError(f"Jones vector needs two components, got {vec.shape[0]}")
    return vec


def _check_normalized(jones: np.ndarray) -> None:
    n2 = float(np.vdot(jones, jones).real)
    if abs(n2 - 1.0) > NORM_TOL:
        raise ValueError(f"input state is not normalized: |alpha|^2+|beta|^2 = {n2!r}")


def drive_phase(voltage: float, config: SwitchConfig) -> float:
    """Linear electro-optic response: pi at ``v_pi``."""
    return math.pi * voltage / config.v_pi


def pass_times(config: SwitchConfig) -> tuple:
    """Arrival times at the modulators of the (cw, ccw) passes after the herald."""
    t_cw = config.short_arm_transit
    return t_cw, t_cw + fiber_delay(config.delay_length, config.group_index)


def _in_window(t: float, pulse: DrivePulse) -> bool:
    # compared at 1 fs so a delay grid point on a window edge is not pushed
    # across it by rounding in ``t - delay``
    offset = round(t - pulse.delay, 15)
    return 0.0 <= offset < round(pulse.width, 15)


def applied_phases(pulse: DrivePulse, config: SwitchConfig) -> PassPhases:
    phi = drive_phase(pulse.voltage, config)
    t_cw, t_ccw = pass_times(config)
    return PassPhases(phi if _in_window(t_cw, pulse) else 0.0,
                      phi if _in_window(t_ccw, pulse) else 0.0)


def output_state(jones: Sequence[complex], phases: PassPhases, config: SwitchConfig) -> ModeState:
    """Final photon state over {D1, D2} x {H, V}, arm losses applied.

    The common factor ``exp(i*phi_ccw)`` is kept, so with ``phi_ccw = 0``
    this is exactly ``(1/2)[i(e^{i phi}+1)|D1> + (e^{i phi}-1)|D2>]`` times
    ``alpha|H> + e^{iKl} beta|V>``.
    """
    jones = jones_vector(jones)
    _check_normalized(jones)
    alpha, beta = jones
    s = config.pm2_drive_scale
    e1_cw, e1_ccw = np.exp(1j * phases.phi_cw), np.exp(1j * phases.phi_ccw)
    e2_cw, e2_ccw = np.exp(1j * s * phases.phi_cw), np.exp(1j * s * phases.phi_ccw)
    v = np.exp(1j * config.mzs_phase_kl) * beta
    a1, a2 = (10.0 ** (-loss / 20.0) for loss in config.arm_losses_db)
    amps = np.array([
        a1 * 0.5j * (e1_cw + e1_ccw) * alpha,
        a1 * 0.5j * (e2_cw + e2_ccw) * v,
        a2 * 0.5 * (e1_cw - e1_ccw) * alpha,
        a2 * 0.5 * (e2_cw - e2_ccw) * v,
    ])
    return ModeState(OUTPUT_BASIS, amps)


def detection_probabilities(jones, phases: PassPhases, config: SwitchConfig,
                            include_loss: bool = False) -> tuple:
    """Probabilities (p1, p2) that the photon leaves towards D1 and D2."""
    if not include_loss:
        config = config.with_(loop_loss_db=0.0, loss_d1_db=None, loss_d2_db=None)
    amps = output_state(jones, phases, config).amplitudes
    p = amps.real ** 2 + amps.imag ** 2
    return float(p[0] + p[1]), float(p[2] + p[3])


def ideal_probabilities(phi_net) -> tuple:
    """cos^2(phi/2), sin^2(phi/2); vectorized over ``phi_net``."""
    c = np.cos(np.asarray(phi_net) / 2.0)
    s = np.sin(np.asarray(phi_net) / 2.0)
    return c * c, s * s


def calibrate_controllers(netlist, **kwargs):
    """Find polarization-controller settings for a preset-family netlist.

    See :func:`sagnac_switch.chain.calibrate_loop` for the search itself.
    """
    from .chain import calibrate_loop, loop_from_netlist

    loop = loop_from_netlist(netlist)
    return calibrate_loop(loop, **kwargs)
