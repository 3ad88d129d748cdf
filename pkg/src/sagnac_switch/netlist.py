"""Line-oriented netlist format (``.sagnet``) for polarization-optics circuits.

Grammar, one statement per line::

    # comment
    <kind> <name> [key=value ...]
    connect <name>.<port> -> <name>.<port>

Parameter units are fixed per key: ``ratio`` (dimensionless), ``angle`` and
``a``/``b``/``c``/``rot_*`` (rad), ``loss_db`` (dB), ``length`` (m),
``group_index``, ``efficiency`` (dimensionless). ``axis`` takes ``H`` or ``V``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .engine import SwitchConfig

HEADER = "# sagnac netlist v1"

_TWO = ("p1", "p2")
_FOUR = ("p1", "p2", "p3", "p4")

PORTS = {
    "bs": _FOUR,
    "pbs": _FOUR,
    "hwp": _TWO,
    "pm": _TWO,
    "pc": _TWO,
    "att": _TWO,
    "fiber": _TWO,
    "circulator": ("p1", "p2", "p3"),
    "source": ("signal", "idler"),
    "detector": ("in",),
}

REQUIRED = {
    "bs": ("ratio",),
    "hwp": ("angle",),
    "pm": ("axis",),
    "pc": ("a", "b", "c"),
    "att": ("loss_db",),
    "fiber": ("length",),
}

OPTIONAL = {
    "fiber": ("group_index", "rot_a", "rot_b", "rot_c"),
    "detector": ("efficiency",),
}

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_ENDPOINT = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\.([A-Za-z0-9_]+)\Z")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str
    severity: str = "error"
    file: str = "<netlist>"

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.severity}: {self.message}"


class NetlistError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


def _norm_number(value: float) -> float:
    # stored at the serialized precision so parse(serialize(n)) == n
    return float(format(float(value), ".9g"))


@dataclass(frozen=True)
class ComponentDecl:
    name: str
    kind: str
    params: tuple = ()
    line: int = field(default=0, compare=False)

    def __post_init__(self):
        items = dict(self.params)
        norm = tuple(sorted(
            (k, v if isinstance(v, str) else _norm_number(v)) for k, v in items.items()))
        object.__setattr__(self, "params", norm)

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    @property
    def ports(self) -> tuple:
        return PORTS[self.kind]


@dataclass(frozen=True, order=True)
class Connection:
    src: tuple  # (component, port)
    dst: tuple
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"connect {self.src[0]}.{self.src[1]} -> {self.dst[0]}.{self.dst[1]}"


@dataclass(frozen=True)
class Netlist:
    """Validated circuit; stored in canonical order so equality ignores file order."""

    decls: tuple = ()
    connections: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "decls", tuple(sorted(self.decls, key=lambda d: d.name)))
        object.__setattr__(self, "connections", tuple(sorted(
            self.connections, key=lambda c: (c.src, c.dst))))

    def decl(self, name: str) -> ComponentDecl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    def of_kind(self, kind: str) -> list:
        return [d for d in self.decls if d.kind == kind]

    def links(self) -> dict:
        """Undirected port adjacency: (name, port) -> (name, port)."""
        out = {}
        for c in self.connections:
            out[c.src] = c.dst
            out[c.dst] = c.src
        return out


def _check_decl(kind, name, params, line, cols, diags):
    for key in REQUIRED.get(kind, ()):
        if key not in params:
            diags.append(Diagnostic(line, cols["name"],
                                    f"{kind} '{name}' is missing required parameter '{key}'"))
    allowed = set(REQUIRED.get(kind, ())) | set(OPTIONAL.get(kind, ()))
    for key, value in params.items():
        col = cols.get(key, 1)
        if key not in allowed:
            diags.append(Diagnostic(line, col, f"unknown parameter '{key}' for {kind}"))
            continue
        if key == "axis":
            if value not in ("H", "V"):
                diags.append(Diagnostic(line, col, f"axis must be H or V, got '{value}'"))
            continue
        if isinstance(value, str):
            diags.append(Diagnostic(line, col, f"parameter '{key}' expects a number, got '{value}'"))
            continue
        if not math.isfinite(value):
            diags.append(Diagnostic(line, col, f"parameter '{key}' must be finite"))
        elif key == "ratio" and not 0 < value < 1:
            diags.append(Diagnostic(line, col, f"ratio must lie in (0, 1), got {value:g}"))
        elif key in ("loss_db", "length") and value < 0:
            diags.append(Diagnostic(line, col, f"{key} must be >= 0, got {value:g}"))
        elif key == "group_index" and value < 1:
            diags.append(Diagnostic(line, col, f"group_index must be >= 1, got {value:g}"))
        elif key == "efficiency" and not 0 <= value <= 1:
            diags.append(Diagnostic(line, col, f"efficiency must lie in [0, 1], got {value:g}"))


def _parse_value(text):
    try:
        return float(text)
    except ValueError:
        return text


def parse(text: str, filename: str = "<netlist>") -> Netlist:
    """Parse and validate netlist text; raises :class:`NetlistError` listing every problem."""
    diags: list = []
    decls: dict = {}
    raw_conns: list = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip())
        tokens = []
        for m in re.finditer(r"\S+", raw):
            tokens.append((m.group(), m.start() + 1))
        head, _ = tokens[0]

        if head == "connect":
            if len(tokens) != 4 or tokens[2][0] != "->":
                diags.append(Diagnostic(lineno, indent + 1,
                                        "expected 'connect <name>.<port> -> <name>.<port>'"))
                continue
            ends = []
            for tok, col in (tokens[1], tokens[3]):
                m = _ENDPOINT.match(tok)
                if not m:
                    diags.append(Diagnostic(lineno, col, f"malformed endpoint '{tok}'"))
                    break
                ends.append(((m.group(1), m.group(2)), col))
            else:
                raw_conns.append((ends[0], ends[1], lineno))
            continue

        if head not in PORTS:
            diags.append(Diagnostic(lineno, indent + 1, f"unknown component kind '{head}'"))
            continue
        if len(tokens) < 2:
            diags.append(Diagnostic(lineno, indent + 1, f"{head} declaration needs a name"))
            continue
        name, name_col = tokens[1]
        if not _NAME.match(name):
            diags.append(Diagnostic(lineno, name_col, f"invalid component name '{name}'"))
            continue
        params, cols, ok = {}, {"name": name_col}, True
        for tok, col in tokens[2:]:
            key, eq, val = tok.partition("=")
            if not eq or not key or not val:
                diags.append(Diagnostic(lineno, col, f"expected key=value, got '{tok}'"))
                ok = False
                continue
            if key in params:
                diags.append(Diagnostic(lineno, col, f"parameter '{key}' given twice"))
                ok = False
                continue
            params[key] = _parse_value(val)
            cols[key] = col
        if name in decls:
            first = decls[name].line
            diags.append(Diagnostic(lineno, name_col,
                                    f"duplicate component name '{name}' (first declared on line {first})"))
            continue
        before = len(diags)
        _check_decl(head, name, params, lineno, cols, diags)
        if ok and len(diags) == before:
            decls[name] = ComponentDecl(name, head, tuple(params.items()), lineno)
        else:
            # keep the name known so connections do not report it as undeclared
            decls[name] = ComponentDecl(name, head, (), lineno)

    used: dict = {}
    conns = []
    for (src, src_col), (dst, dst_col), lineno in raw_conns:
        ok = True
        for (comp, port), col in ((src, src_col), (dst, dst_col)):
            if comp not in decls:
                diags.append(Diagnostic(lineno, col, f"connection references undeclared component '{comp}'"))
                ok = False
            elif port not in decls[comp].ports:
                valid = ", ".join(decls[comp].ports)
                diags.append(Diagnostic(lineno, col,
                                        f"{decls[comp].kind} '{comp}' has no port '{port}' (ports: {valid})"))
                ok = False
            elif (comp, port) in used:
                diags.append(Diagnostic(lineno, col,
                                        f"port {comp}.{port} already connected on line {used[(comp, port)]}"))
                ok = False
            else:
                used[(comp, port)] = lineno
        if src == dst:
            diags.append(Diagnostic(lineno, src_col, f"port {src[0]}.{src[1]} connected to itself"))
            ok = False
        if ok:
            conns.append(Connection(src, dst, lineno))

    if diags:
        raise NetlistError([_with_file(d, filename) for d in sorted(diags, key=lambda d: (d.line, d.col))])
    return Netlist(tuple(decls.values()), tuple(conns))


def _with_file(d: Diagnostic, filename: str) -> Diagnostic:
    return Diagnostic(d.line, d.col, d.message, d.severity, filename)


def _fmt(value) -> str:
    return value if isinstance(value, str) else format(value, ".9g")


def serialize(netlist: Netlist) -> str:
    lines = [HEADER]
    for d in netlist.decls:
        params = " ".join(f"{k}={_fmt(v)}" for k, v in d.params)
        lines.append(f"{d.kind} {d.name}" + (f" {params}" if params else ""))
    if netlist.connections:
        lines.append("")
    lines.extend(str(c) for c in netlist.connections)
    return "\n".join(lines) + "\n"


def validate(text: str, filename: str = "<netlist>") -> list:
    """Diagnostics for ``text``; empty when it parses cleanly."""
    try:
        parse(text, filename)
    except NetlistError as exc:
        return exc.diagnostics
    return []


def sagnac_preset(config: "SwitchConfig | None" = None) -> Netlist:
    """The experimental switch: heralded source, circulator, Sagnac loop with
    polarization controllers, 100 m delay on path B, and the two-modulator
    polarization-splitting structure."""
    if config is None:
        from .engine import SwitchConfig
        config = SwitchConfig()
    loss_d1, loss_d2 = config.arm_losses_db
    q = math.pi / 4
    decls = [
        ComponentDecl("src", "source"),
        ComponentDecl("d_t", "detector"),
        ComponentDecl("hwp_in", "hwp", (("angle", 0.0),)),
        ComponentDecl("circ", "circulator"),
        ComponentDecl("bs", "bs", (("ratio", 0.5),)),
        ComponentDecl("pc_a", "pc", (("a", 0.0), ("b", 0.0), ("c", 0.0))),
        ComponentDecl("pc_b", "pc", (("a", 0.0), ("b", math.pi), ("c", 0.0))),
        ComponentDecl("delay", "fiber", (("length", config.delay_length),
                                         ("group_index", config.group_index))),
        ComponentDecl("pbs_a", "pbs"),
        ComponentDecl("pbs_b", "pbs"),
        ComponentDecl("hwp_mz", "hwp", (("angle", q),)),
        ComponentDecl("pm1", "pm", (("axis", "V"),)),
        ComponentDecl("pm2", "pm", (("axis", "V"),)),
        ComponentDecl("hwp_key", "hwp", (("angle", q),)),
        ComponentDecl("att_d1", "att", (("loss_db", loss_d1),)),
        ComponentDecl("att_d2", "att", (("loss_db", loss_d2),)),
        ComponentDecl("d1", "detector"),
        ComponentDecl("d2", "detector"),
    ]
    wires = [
        ("src.signal", "hwp_in.p1"),
        ("src.idler", "d_t.in"),
        ("hwp_in.p2", "circ.p1"),
        ("circ.p2", "bs.p1"),
        ("bs.p3", "pc_a.p1"),
        ("pc_a.p2", "pbs_a.p1"),
        ("bs.p4", "pc_b.p1"),
        ("pc_b.p2", "delay.p1"),
        ("delay.p2", "pbs_b.p1"),
        ("pbs_a.p3", "hwp_mz.p1"),
        ("hwp_mz.p2", "pm1.p1"),
        ("pm1.p2", "pbs_b.p4"),
        ("pbs_a.p4", "pm2.p1"),
        ("pm2.p2", "hwp_key.p1"),
        ("hwp_key.p2", "pbs_b.p3"),
        ("circ.p3", "att_d1.p1"),
        ("att_d1.p2", "d1.in"),
        ("bs.p2", "att_d2.p1"),
        ("att_d2.p2", "d2.in"),
    ]
    conns = [Connection(tuple(a.split(".")), tuple(b.split("."))) for a, b in wires]
    return Netlist(tuple(decls), tuple(conns))
