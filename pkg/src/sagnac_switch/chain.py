"""Element-by-element propagation through the Sagnac loop.

Every optical element is a :class:`ComponentOp` from :mod:`components`; the
loop is assembled by matrix multiplication with no use of the closed-form
switch formulas. Reverse traversal of an element uses its transpose, so the
counter-clockwise loop operator is built independently from the clockwise
one rather than assumed equal to it.

Element lists are stored in the direction leading away from the loop
beamsplitter (paths) or from ``pbs_a`` to ``pbs_b`` (modulator arms).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .components import (attenuator, beamsplitter, controller_jones, hwp,
                         phase_modulator, polarization_controller, pbs,
                         propagation_phase)
from .engine import PassPhases, SwitchConfig, jones_vector, _check_normalized
from .netlist import Diagnostic, Netlist, NetlistError
from .optics import (ComponentOp, ModeBasis, ModeState, apply, chain, direct_sum,
                     identity, permutation)

P = ModeBasis.of("p")


class TopologyError(NetlistError):
    """Netlist is valid but not a member of the supported Sagnac-switch family."""


class CalibrationError(RuntimeError):
    def __init__(self, message, fidelity):
        super().__init__(message)
        self.fidelity = fidelity


@dataclass(frozen=True)
class Element:
    name: str
    kind: str  # pc | fiber | hwp | pm
    params: tuple = ()
    flipped: bool = False  # declared p2 -> p1 relative to the stored direction

    def get(self, key, default=0.0):
        return dict(self.params).get(key, default)

    def with_params(self, **changes) -> "Element":
        params = dict(self.params)
        params.update(changes)
        return Element(self.name, self.kind, tuple(sorted(params.items())), self.flipped)

    def op(self, phase: float = 0.0, mode: str = "p") -> ComponentOp:
        """Operator in the stored direction; ``phase`` drives modulators."""
        if self.kind == "pc":
            m = polarization_controller(self.get("a"), self.get("b"), self.get("c"), mode)
        elif self.kind == "fiber":
            m = ComponentOp(ModeBasis.of(mode), ModeBasis.of(mode),
                            controller_jones(self.get("rot_a"), self.get("rot_b"), self.get("rot_c")),
                            "unitary", "fiber")
        elif self.kind == "hwp":
            m = hwp(self.get("angle"), mode)
        elif self.kind == "pm":
            m = phase_modulator(phase, self.get("axis", "V"), mode)
        else:
            raise ValueError(f"element kind {self.kind!r} cannot sit inside the loop")
        return m.transpose() if self.flipped else m


@dataclass(frozen=True)
class Loop:
    path_a: tuple
    path_b: tuple
    arm1: tuple
    arm2: tuple
    arm_losses_db: tuple | None = None  # (D1, D2); None -> taken from SwitchConfig
    lines: dict = field(default_factory=dict, compare=False)


def nominal_loop() -> Loop:
    """Ideal alignment: identity controller on A, H<->V swap on B."""
    q = math.pi / 4
    return Loop(
        path_a=(Element("pc_a", "pc", (("a", 0.0), ("b", 0.0), ("c", 0.0))),),
        path_b=(Element("pc_b", "hwp", (("angle", q),)),),
        arm1=(Element("hwp_mz", "hwp", (("angle", q),)), Element("pm1", "pm", (("axis", "V"),))),
        arm2=(Element("pm2", "pm", (("axis", "V"),)), Element("hwp_key", "hwp", (("angle", q),))),
    )


def _path_op(elements, reverse: bool) -> ComponentOp:
    ops = [e.op() for e in elements]
    if reverse:
        ops = [o.transpose() for o in reversed(ops)]
    return chain(identity(P), *ops)


def _arm_op(elements, phase, mode, extra=()) -> ComponentOp:
    ops = [e.op(phase, mode) for e in elements]
    return chain(identity(ModeBasis.of(mode)), *ops, *extra)


def mzs_forward(loop: Loop, phi1: float, phi2: float, kl: float) -> ComponentOp:
    """Polarization-splitting structure traversed from ``pbs_a`` to ``pbs_b``."""
    split = pbs(inputs=("s", "u"), outputs=("arm1", "arm2"))
    arms = direct_sum(
        _arm_op(loop.arm1, phi1, "arm1"),
        _arm_op(loop.arm2, phi2, "arm2", extra=(propagation_phase(kl, "arm2"),)),
    )
    # pbs_b is entered from its arm ports: arm2 on the straight-through port p3,
    # arm1 on the cross port p4
    merge = pbs(inputs=("t", "w"), outputs=("arm2", "arm1")).transpose()
    full = chain(split, arms, permutation(arms.output_basis, merge.input_basis), merge)
    m = full.matrix
    rows = [full.output_basis.index(("t", p)) for p in "HV"]
    cols = [full.input_basis.index(("s", p)) for p in "HV"]
    leak = [full.output_basis.index(("w", p)) for p in "HV"]
    if np.abs(m[np.ix_(leak, cols)]).max() > 1e-9:
        raise TopologyError([Diagnostic(0, 0, "modulator arms do not recombine on one PBS port")])
    return ComponentOp(P, P, m[np.ix_(rows, cols)], "unitary", "mzs")


def loop_operators(loop: Loop, phases: PassPhases, config: SwitchConfig) -> tuple:
    """(clockwise, counter-clockwise) polarization operators of the closed loop.

    Clockwise leaves the beamsplitter on path A and returns on path B.
    """
    s = config.pm2_drive_scale
    cw_mzs = mzs_forward(loop, phases.phi_cw, s * phases.phi_cw, config.mzs_phase_kl)
    ccw_mzs = mzs_forward(loop, phases.phi_ccw, s * phases.phi_ccw, config.mzs_phase_kl).transpose()
    cw = chain(_path_op(loop.path_a, False), cw_mzs, _path_op(loop.path_b, True))
    ccw = chain(_path_op(loop.path_b, False), ccw_mzs, _path_op(loop.path_a, True))
    return cw, ccw


def propagate(jones, phases: PassPhases, config: SwitchConfig, loop: Loop | None = None) -> ModeState:
    """Photon state over {D1, D2} x {H, V} by full matrix-chain propagation."""
    loop = nominal_loop() if loop is None else loop
    jones = jones_vector(jones)
    _check_normalized(jones)
    cw, ccw = loop_operators(loop, phases, config)

    split = beamsplitter(0.5, inputs=("in", "aux"), outputs=("A", "B"))
    around = direct_sum(cw.relabel({"p": "A"}, {"p": "B"}), ccw.relabel({"p": "B"}, {"p": "A"}))
    recombine = split.transpose().relabel({}, {"in": "D1", "aux": "D2"})
    losses = loop.arm_losses_db or config.arm_losses_db
    loss = direct_sum(attenuator(losses[0], "D1"), attenuator(losses[1], "D2"))
    system = chain(split, around, permutation(around.output_basis, recombine.input_basis),
                   recombine, loss)
    state = ModeState.from_jones(split.input_basis, "in", jones)
    return apply(system, state)


# -- netlist extraction ------------------------------------------------------

def _fail(line, message):
    raise TopologyError([Diagnostic(line, 1, f"unsupported topology: {message}")])


def loop_from_netlist(netlist: Netlist) -> Loop:
    """Read the loop out of a preset-family netlist."""
    links = netlist.links()
    conn_line = {}
    for c in netlist.connections:
        conn_line[c.src] = conn_line[c.dst] = c.line
    decls = {d.name: d for d in netlist.decls}

    def line_of(endpoint):
        return conn_line.get(endpoint) or decls[endpoint[0]].line

    def walk(start, allowed, stop_kind):
        elements, seen = [], set()
        here = start
        while True:
            there = links.get(here)
            if there is None:
                _fail(decls[here[0]].line, f"port {here[0]}.{here[1]} is open")
            name, port = there
            d = decls[name]
            if d.kind == stop_kind:
                return elements, there, line_of(there)
            if d.kind not in allowed:
                _fail(line_of(there), f"{d.kind} '{name}' not allowed here")
            if name in seen:
                _fail(line_of(there), f"'{name}' visited twice")
            seen.add(name)
            if port not in ("p1", "p2"):
                _fail(line_of(there), f"unexpected port {name}.{port}")
            elements.append((d, port == "p2"))
            here = (name, "p1" if port == "p2" else "p2")

    # the family is fully wired apart from the idle second PBS input, so any
    # other open port means a lost connection
    for d in netlist.decls:
        for port in d.ports:
            if (d.name, port) not in links and not (d.kind == "pbs" and port == "p2"):
                _fail(d.line, f"port {d.name}.{port} is not connected")
    _check_source(netlist, links, decls, line_of)

    bss = netlist.of_kind("bs")
    if len(bss) != 1:
        _fail(bss[1].line if len(bss) > 1 else 0, f"expected exactly one bs, found {len(bss)}")
    bs = bss[0].name
    path_kinds = ("pc", "fiber", "hwp")
    arm_kinds = ("pc", "fiber", "hwp", "pm")

    path_a, end_a, line_a = walk((bs, "p3"), path_kinds, "pbs")
    path_b, end_b, line_b = walk((bs, "p4"), path_kinds, "pbs")
    if end_a[1] != "p1":
        _fail(line_a, f"path A must enter {end_a[0]} at p1, not {end_a[1]}")
    if end_b[1] != "p1":
        _fail(line_b, f"path B must enter {end_b[0]} at p1, not {end_b[1]}")
    pbs_a, pbs_b = end_a[0], end_b[0]
    if pbs_a == pbs_b:
        _fail(line_b, "paths A and B reach the same pbs")

    arm1, end1, line1 = walk((pbs_a, "p3"), arm_kinds, "pbs")
    arm2, end2, line2 = walk((pbs_a, "p4"), arm_kinds, "pbs")
    if end1 != (pbs_b, "p4"):
        _fail(line1, f"arm from {pbs_a}.p3 must end at {pbs_b}.p4, not {end1[0]}.{end1[1]}")
    if end2 != (pbs_b, "p3"):
        _fail(line2, f"arm from {pbs_a}.p4 must end at {pbs_b}.p3, not {end2[0]}.{end2[1]}")
    for arm, line in ((arm1, line1), (arm2, line2)):
        if sum(d.kind == "pm" for d, _ in arm) != 1:
            _fail(line, "each modulator arm needs exactly one pm")

    d1_loss = _output_arm(links, decls, line_of, (bs, "p1"), via_circulator=True)
    d2_loss = _output_arm(links, decls, line_of, (bs, "p2"), via_circulator=False)

    def elements(items):
        return tuple(Element(d.name, d.kind, d.params, flipped) for d, flipped in items)

    lines = {d.name: d.line for d in netlist.decls}
    return Loop(elements(path_a), elements(path_b), elements(arm1), elements(arm2),
                (d1_loss, d2_loss), lines)


def _check_source(netlist, links, decls, line_of) -> None:
    """Source idler heralds on a detector; signal reaches circulator p1 via waveplates/controllers."""
    sources = netlist.of_kind("source")
    if len(sources) != 1:
        _fail(sources[1].line if sources else 0, f"expected exactly one source, found {len(sources)}")
    src = sources[0].name
    name, _ = links[(src, "idler")]
    if decls[name].kind != "detector":
        _fail(line_of((src, "idler")), f"source idler must herald on a detector, not {decls[name].kind}")
    here, seen = (src, "signal"), set()
    while True:
        name, port = links[here]
        d = decls[name]
        if d.kind == "circulator":
            if port != "p1":
                _fail(line_of((name, port)), f"source must enter {name} at p1, not {port}")
            return
        if d.kind not in ("hwp", "pc", "fiber", "att") or name in seen:
            _fail(line_of((name, port)), f"{d.kind} '{name}' not allowed between source and circulator")
        seen.add(name)
        here = (name, "p1" if port == "p2" else "p2")


def _output_arm(links, decls, line_of, start, via_circulator) -> float:
    """Follow an output port to its detector, summing attenuator losses."""
    loss, here, hops = 0.0, start, 0
    while hops < len(decls) + 1:
        hops += 1
        there = links.get(here)
        if there is None:
            _fail(decls[here[0]].line, f"port {here[0]}.{here[1]} does not lead to a detector")
        name, port = there
        d = decls[name]
        if d.kind == "detector":
            if via_circulator:
                _fail(line_of(there), f"D1 output must pass through a circulator before {name}")
            return loss
        if d.kind == "circulator" and via_circulator:
            if port != "p2":
                _fail(line_of(there), f"loop output must enter {name} at p2, not {port}")
            via_circulator = False
            here = (name, "p3")
        elif d.kind in ("att", "fiber") and port in ("p1", "p2"):
            loss += d.get("loss_db", 0.0)
            here = (name, "p1" if port == "p2" else "p2")
        else:
            _fail(line_of(there), f"{d.kind} '{name}' not allowed on an output arm")
    _fail(0, "output arm does not terminate")


# -- controller calibration ------------------------------------------------

@dataclass(frozen=True)
class CalibrationResult:
    settings: dict  # controller name -> (a, b, c)
    corrections: dict  # controller name -> change from the starting settings
    fidelity_a: float
    fidelity_b: float

    @property
    def fidelity(self) -> float:
        return min(self.fidelity_a, self.fidelity_b)


def routing_fidelity(loop: Loop) -> tuple:
    """Probability that H launched on path A reaches the PM1 arm (H at pbs_a),
    and that H launched on path B reaches it too (V at pbs_b)."""
    pa = _path_op(loop.path_a, False).matrix
    pb = _path_op(loop.path_b, False).matrix
    return float(abs(pa[0, 0]) ** 2), float(abs(pb[1, 0]) ** 2)


def _controller_index(path, label, line):
    idx = [i for i, e in enumerate(path) if e.kind == "pc"]
    if len(idx) != 1:
        _fail(line, f"path {label} needs exactly one polarization controller, found {len(idx)}")
    return idx[0]


def _wrap_pi(x):
    return (x + math.pi) % (2 * math.pi) - math.pi


def _solve_path(path, k, target_row, tol, grid):
    """Settings for controller ``path[k]`` sending H into ``target_row``."""
    pre = _path_op(path[:k], False).matrix
    post = _path_op(path[k + 1:], False).matrix
    wrong = 1 - target_row

    def amp(x):
        return (post @ controller_jones(*x) @ pre)[wrong, 0]

    def residual(x):
        a = amp(x)
        return np.array([a.real, a.imag])

    start = np.array([path[k].get(key) for key in "abc"])
    if abs(amp(start)) ** 2 <= tol * 1e-3:
        return start, 1.0 - abs(amp(start)) ** 2
    values = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
    candidates = [start] + [np.array(x) for x in itertools.product(values, repeat=3)]
    best = min(candidates, key=lambda x: abs(amp(x)))
    sol = least_squares(residual, best, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    x = sol.x
    return x, 1.0 - abs(amp(x)) ** 2


def calibrate_loop(loop: Loop, tol: float = 1e-9, grid: int = 6) -> CalibrationResult:
    """Grid search plus least-squares refinement of the two controllers."""
    line = lambda name: loop.lines.get(name, 0)  # noqa: E731
    ka = _controller_index(loop.path_a, "A", 0)
    kb = _controller_index(loop.path_b, "B", 0)
    xa, _ = _solve_path(loop.path_a, ka, 0, tol, grid)
    xb, _ = _solve_path(loop.path_b, kb, 1, tol, grid)
    pc_a, pc_b = loop.path_a[ka], loop.path_b[kb]
    calibrated = Loop(
        loop.path_a[:ka] + (pc_a.with_params(**dict(zip("abc", map(float, xa)))),) + loop.path_a[ka + 1:],
        loop.path_b[:kb] + (pc_b.with_params(**dict(zip("abc", map(float, xb)))),) + loop.path_b[kb + 1:],
        loop.arm1, loop.arm2, loop.arm_losses_db, loop.lines)
    fa, fb = routing_fidelity(calibrated)
    if min(fa, fb) < 1 - tol:
        raise CalibrationError(
            f"controller search did not converge (best fidelity {min(fa, fb):.12f}, "
            f"{pc_a.name} line {line(pc_a.name)}, {pc_b.name} line {line(pc_b.name)})",
            min(fa, fb))
    settings = {pc_a.name: tuple(map(float, xa)), pc_b.name: tuple(map(float, xb))}
    corrections = {
        pc.name: tuple(_wrap_pi(float(n) - pc.get(k)) for n, k in zip(x, "abc"))
        for pc, x in ((pc_a, xa), (pc_b, xb))
    }
    return CalibrationResult(settings, corrections, fa, fb)


def apply_calibration(loop: Loop, result: CalibrationResult) -> Loop:
    def fix(path):
        return tuple(e.with_params(**dict(zip("abc", result.settings[e.name])))
                     if e.name in result.settings else e for e in path)

    return Loop(fix(loop.path_a), fix(loop.path_b), loop.arm1, loop.arm2,
                loop.arm_losses_db, loop.lines)
