"""Text formats for spaces, functions, dyadic systems, ledgers and norm tables.

Reals are written with 17 significant digits (``inf``/``-inf``/``nan``
spelled out), so every file round-trips bit-exactly and reruns produce
identical bytes.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .exponents import INF
from .rearrange import SampledFunction
from .space import PointSpace

LEDGER_COLUMNS = ("claim", "function", "q", "alpha", "p", "r", "lhs", "rhs",
                  "constant", "slack", "verdict")


def num(x):
    """17-significant-digit text for a real; empty for ``None``."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def parse_num(text):
    text = text.strip()
    return None if text == "" else float(text)


def _parse_id(tok):
    try:
        return int(tok)
    except ValueError:
        return tok


# -- spaces -----------------------------------------------------------------


def dump_space(space):
    """Header lines, a point table ``id weight margin coords...`` and, for
    spaces without coordinates, a full distance block."""
    out = ["fracmean-space 1", f"name {space.name or ''}", f"kappa {num(space.kappa)}",
           f"power {num(space.power)}", f"backend {space.backend}"]
    dim = 0 if space.coords is None else space.coords.shape[1]
    out.append(f"dimension {dim}")
    if space.grid is not None:
        g = space.grid
        out.append("grid " + " ".join([str(g["dim"]), num(g["spacing"])] + [str(s) for s in g["shape"]]))
    out.append(f"points {space.n}")
    for i in range(space.n):
        row = [str(space.ids[i]), num(space.weights[i]), num(space.margin[i])]
        if dim:
            row += [num(c) for c in space.coords[i]]
        out.append(" ".join(row))
    if dim == 0:
        out.append("distances")
        D = space.distance_matrix
        for i in range(space.n):
            out.append(" ".join(num(v) for v in D[i]))
    return "\n".join(out) + "\n"


def save_space(space, path):
    Path(path).write_text(dump_space(space))


def parse_space(text):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].split()[0] != "fracmean-space":
        raise ConfigError("not a space file")
    head, i = {}, 1
    while i < len(lines) and not lines[i].startswith("points"):
        key, _, rest = lines[i].partition(" ")
        head[key] = rest.strip()
        i += 1
    if i == len(lines):
        raise ConfigError("space file has no point table")
    n = int(lines[i].split()[1])
    dim = int(head.get("dimension", 0))
    rows = [ln.split() for ln in lines[i + 1:i + 1 + n]]
    if len(rows) != n:
        raise ConfigError("point table is truncated")
    ids = [_parse_id(r[0]) for r in rows]
    w = np.array([float(r[1]) for r in rows])
    margin = np.array([float(r[2]) for r in rows])
    kw = {"kappa": float(head.get("kappa", 1)), "ids": ids, "margin": margin,
          "name": head.get("name") or None}
    if "grid" in head:
        g = head["grid"].split()
        kw["grid"] = {"dim": int(g[0]), "spacing": float(g[1]), "shape": tuple(int(s) for s in g[2:])}
    power = float(head.get("power", 1))
    if dim:
        coords = np.array([[float(c) for c in r[3:3 + dim]] for r in rows])
        if head.get("backend") == "line":
            return PointSpace.from_line(coords[:, 0], w, power=power, **kw)
        return PointSpace.from_coords(coords, w, power=power, **kw)
    rest = lines[i + 1 + n:]
    if not rest or rest[0].strip() != "distances":
        raise ConfigError("space without coordinates needs a distance block")
    D = np.array([[float(v) for v in ln.split()] for ln in rest[1:1 + n]])
    return PointSpace.from_matrix(D, w, power=power, **kw)


def load_space(path):
    try:
        return parse_space(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"space file not found: {path}") from None


# -- functions --------------------------------------------------------------


def dump_function(f):
    """``space <name>`` then one ``id real imag`` line per point."""
    out = [f"fracmean-function 1", f"space {f.space.name or ''}", f"name {f.name or ''}"]
    vals = np.asarray(f.values)
    for pid, v in zip(f.space.ids, vals):
        out.append(f"{pid} {num(v.real)} {num(v.imag)}")
    return "\n".join(out) + "\n"


def parse_function(text, space):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split()[0] != "fracmean-function":
        raise ConfigError("not a function file")
    name = None
    pairs = {}
    for ln in lines[1:]:
        if ln.startswith("space "):
            continue
        if ln.startswith("name "):
            name = ln[5:].strip() or None
            continue
        tok = ln.split()
        pid = _parse_id(tok[0])
        if pid not in space._index:
            raise DomainError(f"point {pid!r} is not in the space")
        pairs[pid] = complex(float(tok[1]), float(tok[2]) if len(tok) > 2 else 0.0)
    return SampledFunction.from_mapping(space, pairs, name)


# -- dyadic systems ---------------------------------------------------------


def dump_dyadic(system):
    """One line per cube: ``k j center parent_k parent_j members...`` (parent ``- -`` at the top)."""
    out = []
    for row in system.dump():
        parent = row["parent"] or ["-", "-"]
        out.append(" ".join([str(row["k"]), str(row["j"]), str(row["center"]),
                             str(parent[0]), str(parent[1])] + [str(m) for m in row["members"]]))
    return "\n".join(out) + "\n"


# -- ledger -----------------------------------------------------------------


def _exp(x):
    return "" if x is None else ("inf" if x == INF else num(x))


def ledger_rows(ledger):
    for rec in ledger.records():
        yield [rec.claim, rec.function, _exp(rec.q), _exp(rec.alpha), _exp(rec.p), num(rec.r),
               num(rec.lhs), num(rec.rhs), num(rec.constant), num(rec.slack), rec.verdict]


def ledger_csv(ledger):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LEDGER_COLUMNS)
    w.writerows(ledger_rows(ledger))
    return buf.getvalue()


def read_ledger_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("q", "alpha", "p", "r", "lhs", "rhs", "constant", "slack"):
            row[key] = parse_num(row[key])
    return rows


def ledger_text(ledger):
    """Per-claim summary block followed by its failing records."""
    out = [f"ledger: {len(ledger.reports)} claims, "
           f"{sum(len(r.records) for r in ledger.reports)} records, "
           f"{'PASS' if ledger.passed else 'FAIL'}"]
    for rep in ledger.reports:
        out.append("")
        out.append(f"[{rep.claim}] {rep.verdict}")
        out.append(f"  kind: {rep.kind}")
        out.append(f"  formula: {rep.formula}")
        out.append(f"  cases: {len(rep.records)}")
        out.append(f"  empirical constant: {num(rep.empirical_constant)}")
        out.append(f"  worst relative slack: {num(rep.worst_relative_slack)}")
        for rec in rep.failures[:10]:
            out.append(f"  fail: {rec.function} r={num(rec.r)} lhs={num(rec.lhs)} rhs={num(rec.rhs)}")
    return "\n".join(out) + "\n"


# -- norm tables and plot data ----------------------------------------------


def norm_table_csv(rows):
    """Rows ``(norm, function, params, scale, value, boundary_flag, constants)``."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("norm", "function", "params", "scale", "value", "boundary_flag", "constants"))
    for norm, fid, params, scale, value, flag, const in rows:
        w.writerow((norm, fid, params, scale if isinstance(scale, str) else num(scale),
                    num(value), int(bool(flag)), const))
    return buf.getvalue()


def plot_data_csv(rows):
    """Rows ``(function, params, r, value)``: the profile ``r -> r||f||``."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("function", "params", "r", "value"))
    for fid, params, r, value in rows:
        w.writerow((fid, params, num(r), num(value)))
    return buf.getvalue()


# -- witness ----------------------------------------------------------------


def witness_json(plan):
    return json.dumps(plan.to_dict(), indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def load_witness(path):
    from .witness import WitnessPlan

    return WitnessPlan.from_dict(json.loads(Path(path).read_text()))
