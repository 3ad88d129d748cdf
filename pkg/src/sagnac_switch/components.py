"""Constructors for the optical elements of the switch.

Conventions:

* Beamsplitter: transmission amplitude ``sqrt(r)``, reflection ``i*sqrt(1-r)``.
* PBS: H transmits to the straight-through port, V reflects to the cross port.
  With ports ``(1, 2) -> (3, 4)``, port 3 is straight through from port 1.
* Half-wave plate: real form ``[[cos 2t, sin 2t], [sin 2t, -cos 2t]]``.
* Polarization controller: three variable retarders with axes at 0, 45 and 0
  degrees, traversed in argument order; all three at zero is the identity.
* Every constructor returns the matrix for the element's forward direction;
  use :meth:`ComponentOp.transpose` for reverse traversal.

Angles are radians.
"""
from __future__ import annotations

import math

import numpy as np

from .optics import ComponentOp, ModeBasis, Polarization

SPEED_OF_LIGHT = 299_792_458.0  # m/s
DEFAULT_GROUP_INDEX = 1.468


def _pol_op(jones, mode: str, kind: str, name: str) -> ComponentOp:
    basis = ModeBasis.of(mode)
    return ComponentOp(basis, basis, np.asarray(jones, dtype=complex), kind, name)


def beamsplitter(ratio: float, inputs=("A", "B"), outputs=None) -> ComponentOp:
    """Polarization-independent coupler; ``inputs[k]`` transmits to ``outputs[k]``."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"splitting ratio must lie in (0, 1), got {ratio}")
    outputs = inputs if outputs is None else outputs
    t = math.sqrt(ratio)
    r = 1j * math.sqrt(1.0 - ratio)
    m = np.kron(np.array([[t, r], [r, t]]), np.eye(2))
    return ComponentOp(ModeBasis.of(*inputs), ModeBasis.of(*outputs), m, "unitary", "bs")


def pbs(inputs=("1", "2"), outputs=("3", "4")) -> ComponentOp:
    i1, i2 = inputs
    o1, o2 = outputs
    b_in, b_out = ModeBasis.of(i1, i2), ModeBasis.of(o1, o2)
    H, V = Polarization.H, Polarization.V
    m = np.zeros((4, 4))
    for src, dst in [((i1, H), (o1, H)), ((i1, V), (o2, V)),
                     ((i2, H), (o2, H)), ((i2, V), (o1, V))]:
        m[b_out.index(dst), b_in.index(src)] = 1.0
    return ComponentOp(b_in, b_out, m, "unitary", "pbs")


def hwp_jones(angle: float) -> np.ndarray:
    c, s = math.cos(2 * angle), math.sin(2 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def hwp(angle: float, mode: str = "p") -> ComponentOp:
    return _pol_op(hwp_jones(angle), mode, "unitary", "hwp")


def phase_modulator(phase: float, axis: Polarization | str = Polarization.V, mode: str = "p") -> ComponentOp:
    """Phase ``e^{i*phase}`` on the ``axis`` polarization only."""
    axis = Polarization(axis)
    d = [1.0, 1.0]
    d[0 if axis is Polarization.H else 1] = np.exp(1j * phase)
    return _pol_op(np.diag(d), mode, "unitary", "pm")


def propagation_phase(phase: float, mode: str = "p") -> ComponentOp:
    """Common phase on both polarizations (path-length difference)."""
    return _pol_op(np.exp(1j * phase) * np.eye(2), mode, "unitary", "phase")


def controller_jones(a: float, b: float, c: float) -> np.ndarray:
    def r0(d):
        return np.diag([np.exp(-0.5j * d), np.exp(0.5j * d)])

    def r45(d):
        cs, sn = math.cos(d / 2), math.sin(d / 2)
        return np.array([[cs, -1j * sn], [-1j * sn, cs]])

    return r0(c) @ r45(b) @ r0(a)


def polarization_controller(a: float, b: float, c: float, mode: str = "p") -> ComponentOp:
    return _pol_op(controller_jones(a, b, c), mode, "unitary", "pc")


def controller_inverse(a: float, b: float, c: float) -> tuple:
    """Settings whose controller undoes ``polarization_controller(a, b, c)``."""
    return (-c, -b, -a)


def attenuator(loss_db: float, mode: str = "p") -> ComponentOp:
    if loss_db < 0:
        raise ValueError(f"attenuation must be >= 0 dB, got {loss_db}")
    amp = 10.0 ** (-loss_db / 20.0)
    return _pol_op(amp * np.eye(2), mode, "lossy", "att")


def fiber_delay(length_m: float, group_index: float = DEFAULT_GROUP_INDEX) -> float:
    """Group delay in seconds of a fiber span."""
    if length_m < 0:
        raise ValueError(f"fiber length must be >= 0, got {length_m}")
    if group_index < 1:
        raise ValueError(f"group index must be >= 1, got {group_index}")
    return length_m * group_index / SPEED_OF_LIGHT


_CIRCULATOR = {1: 2, 2: 3}


def circulator_route(in_port) -> int:
    """Port a photon entering ``in_port`` leaves from (1 -> 2 -> 3)."""
    try:
        port = int(str(in_port).lstrip("p"))
    except ValueError:
        raise ValueError(f"unknown circulator port {in_port!r}") from None
    if port not in _CIRCULATOR:
        raise ValueError(f"circulator port {in_port!r} has no onward port")
    return _CIRCULATOR[port]
