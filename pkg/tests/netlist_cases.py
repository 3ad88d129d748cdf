"""Shared netlist fixtures: random valid circuits and single-edit corruptions."""
from pathlib import Path

from hypothesis import strategies as st

from sagnac_switch import netlist as nl
from sagnac_switch.chain import TopologyError, loop_from_netlist

GOLDEN = Path(__file__).parent / "golden" / "preset.sagnet"

_NUM = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
_VALUES = {
    "ratio": st.floats(1e-6, 1 - 1e-6),
    "angle": _NUM, "a": _NUM, "b": _NUM, "c": _NUM,
    "rot_a": _NUM, "rot_b": _NUM, "rot_c": _NUM,
    "loss_db": st.floats(0, 100), "length": st.floats(0, 1e5),
    "group_index": st.floats(1, 4), "efficiency": st.floats(0, 1),
    "axis": st.sampled_from(["H", "V"]),
}
_names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True).filter(lambda s: s != "connect")


@st.composite
def decls(draw, name):
    kind = draw(st.sampled_from(sorted(nl.PORTS)))
    keys = list(nl.REQUIRED.get(kind, ()))
    keys += [k for k in nl.OPTIONAL.get(kind, ()) if draw(st.booleans())]
    return nl.ComponentDecl(name, kind, tuple((k, draw(_VALUES[k])) for k in keys))


@st.composite
def netlists(draw):
    names = draw(st.lists(_names, min_size=0, max_size=8, unique=True))
    ds = [draw(decls(n)) for n in names]
    free = [(d.name, p) for d in ds for p in d.ports]
    free = draw(st.permutations(free))
    n_conn = draw(st.integers(0, len(free) // 2))
    conns = [nl.Connection(free[2 * k], free[2 * k + 1]) for k in range(n_conn)]
    return nl.Netlist(tuple(ds), tuple(conns))


_BAD = {"ratio": ["1.5", "0", "x"], "angle": ["nan", "x"], "a": ["inf", "x"], "b": ["x"],
        "c": ["x"], "loss_db": ["-1", "x"], "length": ["-5", "x"], "group_index": ["0.5", "x"],
        "axis": ["D"]}


def corruptions(text):
    """Every single-token or single-line edit that breaks the preset.

    Yields (label, edited_text). Covers line deletion and duplication, kind,
    name, key and port replacement, dropping a required parameter, invalid
    values and rewiring any connection end to any other declared port.
    Dropping an optional key or changing a value inside its valid domain is
    a legitimate edit and is not generated.
    """
    lines = text.split("\n")
    declared = nl.parse(text).decls
    for i, line in enumerate(lines):
        if not line.strip() or line.startswith("#"):
            continue
        yield f"delete line {i + 1}", lines[:i] + lines[i + 1:]
        yield f"duplicate line {i + 1}", lines[:i + 1] + [line] + lines[i + 1:]
        toks = line.split(" ")

        def sub(j, new, toks=toks, i=i):
            t = list(toks)
            t[j] = new
            return lines[:i] + [" ".join(t)] + lines[i + 1:]

        if toks[0] == "connect":
            yield f"arrow line {i + 1}", sub(2, "=>")
            for j in (1, 3):
                comp, port = toks[j].split(".")
                yield f"port line {i + 1}", sub(j, f"{comp}.zz")
                yield f"component line {i + 1}", sub(j, f"ghost.{port}")
                for d in declared:
                    for p in d.ports:
                        if (d.name, p) != (comp, port):
                            yield f"rewire line {i + 1} to {d.name}.{p}", sub(j, f"{d.name}.{p}")
            continue
        kind = toks[0]
        yield f"kind line {i + 1}", sub(0, "widget")
        yield f"name line {i + 1}", sub(1, toks[1] + "_x")
        for j in range(2, len(toks)):
            key, _, value = toks[j].partition("=")
            if key in nl.REQUIRED.get(kind, ()):
                yield f"drop {key} line {i + 1}", lines[:i] + [" ".join(toks[:j] + toks[j + 1:])] + lines[i + 1:]
            yield f"key {key} line {i + 1}", sub(j, f"{key}x={value}")
            for bad in _BAD.get(key, []):
                yield f"{key}={bad} line {i + 1}", sub(j, f"{key}={bad}")


def rejection(text):
    """Diagnostics from parsing plus the topology check; empty when accepted."""
    diags = nl.validate(text)
    if diags:
        return diags
    try:
        loop_from_netlist(nl.parse(text))
    except TopologyError as exc:
        return exc.diagnostics
    return []
