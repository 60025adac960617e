"""Interval-arithmetic replay of the computer-assisted steps for alpha = 0.

Three checks are provided:

* :func:`verify_tail_region`: F(q) = d/dq E_0(1, q) is positive on [0.9, 1);
* :func:`verify_first_grid`: the scaled lower bound M(j, k) on
  [0, 1/2] x [0, 1/10] stays above 0.2744;
* :func:`verify_second_grid`: B(s, q) >= 0.0013 on (0, 1) x [0.1, 0.9].

Cell endpoints are built from exact rationals and enclosed outwards, so the
union of the cells covers the stated region exactly.  B is enclosed with a
mean-value (centered) form on each cell; with the natural extension the
dependency between 2/q and 1/log(1-q) inside E(1, q), E(0, q) costs more
than the whole margin at the reference resolution.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import DomainError, IntervalDomainError
from .interval import Interval, as_interval, from_fraction, iv_ln, iv_pow_int
from .series import R_DEG_Q, R_DEG_S, r_coeff_table

FIRST_THRESHOLD = 0.2744
SECOND_THRESHOLD = 0.0013
MAX_DEPTH = 12
_F = Fraction


@dataclass
class GridReport:
    grid_spec: dict
    threshold: float | None
    min_lo: float
    min_hi: float
    worst_cell: dict
    cells: int
    elapsed_ms: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def write_certificate(path: str, reports: dict[str, GridReport], extra: dict | None = None) -> dict:
    """Write a JSON certificate for a set of reports; returns the payload."""
    payload = {
        "tool": "apsis",
        "version": __version__,
        "created_unix": time.time(),
        "reports": {k: v.to_json() for k, v in reports.items()},
        "pass": all(r.passed for r in reports.values()),
    }
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


# -- exact cell construction --------------------------------------------------------


def rational_cells(a: Fraction, b: Fraction, step: Fraction) -> Interval:
    """Float cells whose union contains [a, b], each cell [a + k step, a + (k+1) step]."""
    a, b, step = _F(a), _F(b), _F(step)
    n = math.ceil((b - a) / step)
    lo = np.empty(n)
    hi = np.empty(n)
    for k in range(n):
        lo[k] = from_fraction(a + k * step).lo
        hi[k] = from_fraction(min(a + (k + 1) * step, b)).hi
    return Interval(lo, hi)


# -- polynomial pieces ------------------------------------------------------------------


def _poly2(table, s: Interval, q: Interval) -> Interval:
    """sum_j q^j sum_i table[j][i] s^i by nested Horner."""
    acc = None
    for row in reversed(table):
        inner = None
        for c in reversed(row):
            inner = as_interval(c) if inner is None else inner * s + as_interval(c)
        acc = inner if acc is None else acc * q + inner
    return acc


def _r_tables():
    t = r_coeff_table()
    ds = [[(i + 1) * t[j][i + 1] for i in range(R_DEG_S)] for j in range(R_DEG_Q + 1)]
    dq = [[(j + 1) * t[j + 1][i] for i in range(R_DEG_S + 1)] for j in range(R_DEG_Q)]
    tilde = [t[j + 1] for j in range(R_DEG_Q)]
    return t, ds, dq, tilde


_R, _RS, _RQ, _RT = _r_tables()


def r_interval(s, q) -> Interval:
    return _poly2(_R, as_interval(s), as_interval(q))


def r_tilde_interval(s, q) -> Interval:
    """(R(s, q) - (1/3 - 2s/3)) / q."""
    return _poly2(_RT, as_interval(s), as_interval(q))


def _log_bits(q: Interval):
    one_m = 1.0 - q
    return one_m, iv_ln(one_m)


def e_one_interval(q) -> Interval:
    """E(1, q) = 2/q - 1 + (2-q)/log(1-q) (natural extension)."""
    q = as_interval(q)
    _, L = _log_bits(q)
    return 2.0 / q - 1.0 + (2.0 - q) / L


def e_zero_interval(q) -> Interval:
    """E(0, q) = 1 - 2/q - (2-q)/((1-q) log(1-q))."""
    q = as_interval(q)
    om, L = _log_bits(q)
    return 1.0 - 2.0 / q - (2.0 - q) / (om * L)


def e_one_dq_interval(q) -> Interval:
    """d/dq E(1, q) = F(q)."""
    q = as_interval(q)
    om, L = _log_bits(q)
    return -2.0 / iv_pow_int(q, 2) - 1.0 / L + (2.0 - q) / (om * iv_pow_int(L, 2))


def e_zero_dq_interval(q) -> Interval:
    q = as_interval(q)
    om, L = _log_bits(q)
    return 2.0 / iv_pow_int(q, 2) - (L + 2.0 - q) / (iv_pow_int(om, 2) * iv_pow_int(L, 2))


def n_interval(q) -> Interval:
    """N(q) = 4(1-q)^2 L^3 + q^4 L + 2 q^3 (2-q), L = log(1-q)."""
    q = as_interval(q)
    om, L = _log_bits(q)
    return 4.0 * iv_pow_int(om, 2) * iv_pow_int(L, 3) + iv_pow_int(q, 4) * L + 2.0 * iv_pow_int(q, 3) * (2.0 - q)


def b_tail_interval(q) -> Interval:
    """log(1-q) - 4q + 6."""
    q = as_interval(q)
    return _log_bits(q)[1] - 4.0 * q + 6.0


# -- B(s, q) --------------------------------------------------------------------------------


def _b_natural(s: Interval, q: Interval) -> Interval:
    p1 = iv_pow_int(1.0 + e_one_interval(q), 2)
    p0 = iv_pow_int(1.0 + e_zero_interval(q), 2)
    return r_interval(s, q) * p1 + r_interval(1.0 - s, q) * p0


def _b_centered(s: Interval, q: Interval) -> Interval:
    sm = Interval.point(np.clip(s.mid, s.lo, s.hi))
    qm = Interval.point(np.clip(q.mid, q.lo, q.hi))
    centre = _b_natural(sm, qm)
    r1 = 1.0 - s
    e1 = e_one_interval(q)
    e0 = e_zero_interval(q)
    p1 = iv_pow_int(1.0 + e1, 2)
    p0 = iv_pow_int(1.0 + e0, 2)
    grad_s = _poly2(_RS, s, q) * p1 - _poly2(_RS, r1, q) * p0
    grad_q = (
        _poly2(_RQ, s, q) * p1
        + 2.0 * r_interval(s, q) * (1.0 + e1) * e_one_dq_interval(q)
        + _poly2(_RQ, r1, q) * p0
        + 2.0 * r_interval(r1, q) * (1.0 + e0) * e_zero_dq_interval(q)
    )
    return centre + grad_s * (s - sm) + grad_q * (q - qm)


def b_lower(s, q, form: str = "centered") -> Interval:
    """Enclosure of B(s,q) = R(s,q)(1+E(1,q))^2 + R(1-s,q)(1+E(0,q))^2.

    ``form`` is ``"centered"`` (mean-value form, tight on small cells) or
    ``"natural"`` (direct interval evaluation).
    """
    s, q = as_interval(s), as_interval(q)
    if np.any(s.lo < 0) or np.any(s.hi > 1):
        raise DomainError("s must lie in [0, 1]")
    if np.any(q.lo <= 0) or np.any(q.hi >= 1):
        raise IntervalDomainError("q must lie in (0, 1)")
    if form == "natural":
        return _b_natural(s, q)
    if form == "centered":
        return _b_centered(s, q)
    raise DomainError(f"unknown form {form!r}")


# -- tail region -------------------------------------------------------------------------------


def verify_tail_region(n_sub: int = 100) -> GridReport:
    t0 = time.perf_counter()
    q09 = from_fraction(_F(9, 10))
    q091 = from_fraction(_F(91, 100))
    F09 = e_one_dq_interval(q09)
    B091 = b_tail_interval(q091)
    cells = rational_cells(_F(9, 10), _F(91, 100), _F(1, 100 * n_sub))
    N = n_interval(cells)
    k = int(np.argmax(N.hi))
    f_ok = bool(F09.lo >= 0.0394 and F09.hi <= 0.040)
    b_ok = bool(B091.hi < -0.04)
    n_ok = bool(np.max(N.hi) < -0.2)
    details = {
        "F_0.9": [float(F09.lo), float(F09.hi)],
        "B_0.91": [float(B091.lo), float(B091.hi)],
        "N_max_hi_on_0.9_0.91": float(np.max(N.hi)),
        "N_subintervals": n_sub,
        "checks": {"F_0.9_in_[0.0394,0.040]": f_ok, "B_0.91_below_-0.04": b_ok, "N_below_-0.2": n_ok},
        "F_positive_on_[0.9,1)": bool(f_ok and b_ok and n_ok and F09.lo > 0),
    }
    return GridReport(
        grid_spec={"region": "q in [0.9, 1)", "N_cells": n_sub},
        threshold=0.0,
        min_lo=float(F09.lo),
        min_hi=float(F09.hi),
        worst_cell={"index": k, "q": [float(cells.lo[k]), float(cells.hi[k])], "N_hi": float(N.hi[k])},
        cells=n_sub,
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
        passed=bool(f_ok and b_ok and n_ok),
        details=details,
    )


# -- first grid ----------------------------------------------------------------------------------

_U1 = [_F(-1, 3), _F(0), _F(1, 90), _F(-29, 90)]  # (E1 bound - 1 - ... ) / q, in powers of q
_V0 = [_F(1, 3), _F(1, 3), _F(2, 5)]


def _poly1(coeffs, x: Interval) -> Interval:
    acc = None
    for c in reversed(coeffs):
        acc = as_interval(c) if acc is None else acc * x + as_interval(c)
    return acc


def e_tilde_one(q) -> Interval:
    """Etilde(1,q) with (2 - q/3 + q^3/90 - 29 q^4/90)^2 = 4 + q Etilde(1,q)."""
    q = as_interval(q)
    u = _poly1(_U1, q)  # u = (bound - 2)/q
    return 4.0 * u + q * iv_pow_int(u, 2)


def e_tilde_zero(q) -> Interval:
    """Etilde(0,q) with (2 + q/3 + q^2/3 + 0.4 q^3)^2 = 4 + q Etilde(0,q)."""
    q = as_interval(q)
    v = _poly1(_V0, q)
    return 4.0 * v + q * iv_pow_int(v, 2)


def m_interval(s, q) -> Interval:
    s, q = as_interval(s), as_interval(q)
    rs = r_tilde_interval(s, q)
    rr = r_tilde_interval(1.0 - s, q)
    e1 = e_tilde_one(q)
    e0 = e_tilde_zero(q)
    lin = from_fraction(_F(1, 3)) - from_fraction(_F(2, 3)) * s
    return 4.0 * (rs + rr) + lin * (e1 - e0) + q * (rs * e1 + rr * e0)


def _grid(si: Interval, qi: Interval):
    S = Interval(np.repeat(si.lo, qi.lo.size), np.repeat(si.hi, qi.lo.size))
    Q = Interval(np.tile(qi.lo, si.lo.size), np.tile(qi.hi, si.lo.size))
    return S, Q


def _split4(S: Interval, Q: Interval):
    sm = np.clip(S.mid, S.lo, S.hi)
    qm = np.clip(Q.mid, Q.lo, Q.hi)
    slo = np.concatenate([S.lo, S.lo, sm, sm])
    shi = np.concatenate([sm, sm, S.hi, S.hi])
    qlo = np.concatenate([Q.lo, qm, Q.lo, qm])
    qhi = np.concatenate([qm, Q.hi, qm, Q.hi])
    return Interval(slo, shi), Interval(qlo, qhi)


def _refine(fn, S: Interval, Q: Interval, fails, max_depth: int, hopeless=None):
    """Per-cell enclosure of the minimum, bisecting failing cells.

    ``fails(lo)`` flags enclosures that are not yet good enough.  A failing
    cell is split into four up to ``max_depth`` times; its lower bound is the
    minimum lo over its final leaves, and its upper bound the minimum hi over
    every leaf evaluated (each leaf is a subset of the cell).  Cells whose
    upper bound satisfies ``hopeless`` are certain failures and stop splitting.
    """
    val = fn(S, Q)
    n = val.lo.size
    hi = val.hi.copy()
    settled = np.where(fails(val.lo), np.inf, val.lo)
    depth = np.zeros(n, dtype=int)
    owner = np.flatnonzero(fails(val.lo))
    S_act, Q_act = S[owner], Q[owner]
    act_lo = val.lo[owner]
    d = 0
    while owner.size and d < max_depth:
        if hopeless is not None:
            live = ~hopeless(hi[owner])
            np.minimum.at(settled, owner[~live], act_lo[~live])
            owner, S_act, Q_act, act_lo = owner[live], S_act[live], Q_act[live], act_lo[live]
            if not owner.size:
                break
        d += 1
        S_act, Q_act = _split4(S_act, Q_act)
        owner = np.tile(owner, 4)
        v = fn(S_act, Q_act)
        np.minimum.at(hi, owner, v.hi)
        depth[owner] = d
        bad = fails(v.lo)
        np.minimum.at(settled, owner[~bad], v.lo[~bad])
        owner = owner[bad]
        S_act, Q_act = S_act[bad], Q_act[bad]
        act_lo = v.lo[bad]
    lo = settled.copy()
    np.minimum.at(lo, owner, act_lo)
    return lo, hi, depth


def _summarise(lo, hi, S, Q, shape):
    k = int(np.lexsort((np.arange(lo.size), lo))[0])  # min lo, ties by index
    j, i = divmod(k, shape[1])
    return {
        "index": [int(j), int(i)],
        "s": [float(S.lo[k]), float(S.hi[k])],
        "q": [float(Q.lo[k]), float(Q.hi[k])],
        "lo": float(lo[k]),
        "hi": float(hi[k]),
    }


def verify_first_grid(max_depth: int = MAX_DEPTH, threshold: float = FIRST_THRESHOLD) -> GridReport:
    """Interval evaluation of M on the 25 x 10 cells covering [0,1/2] x [0,1/10]."""
    t0 = time.perf_counter()
    si = rational_cells(_F(0), _F(1, 2), _F(1, 50))
    qi = rational_cells(_F(0), _F(1, 10), _F(1, 100))
    S, Q = _grid(si, qi)
    lo, hi, depth = _refine(m_interval, S, Q, lambda x: x <= threshold, max_depth,
                            hopeless=lambda x: x <= threshold)
    worst = _summarise(lo, hi, S, Q, (si.lo.size, qi.lo.size))
    min_lo = float(np.min(lo))
    return GridReport(
        grid_spec={"s": [0, 0.5], "q": [0, 0.1], "ds": 0.02, "dq": 0.01,
                   "n_s": int(si.lo.size), "n_q": int(qi.lo.size), "max_depth": max_depth},
        threshold=threshold,
        min_lo=min_lo,
        min_hi=float(np.min(hi)),
        worst_cell=worst,
        cells=int(lo.size),
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
        passed=bool(min_lo > threshold),
        details={"refined_cells": int(np.count_nonzero(depth)), "max_depth_used": int(depth.max())},
    )


# -- second grid ---------------------------------------------------------------------------------


def _second_chunk(args):
    s_lo, s_hi, q_lo, q_hi, target, positivity, max_depth = args
    S, Q = _grid(Interval(s_lo, s_hi), Interval(q_lo, q_hi))
    if positivity:
        fails = lambda x: x <= 0.0  # noqa: E731
    else:
        fails = lambda x: x < target  # noqa: E731
    lo, hi, depth = _refine(_b_centered, S, Q, fails, max_depth, hopeless=fails)
    k = int(np.lexsort((np.arange(lo.size), lo))[0])
    return float(np.min(lo)), float(np.min(hi)), k, int(np.count_nonzero(depth)), int(depth.max())


def default_workers() -> int:
    env = os.environ.get("APSIS_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def verify_second_grid(ds: float = 2e-3, dq: float = 2e-4, threshold: float | None = None,
                       workers: int = 1, chunk_q: int = 100, max_depth: int = MAX_DEPTH,
                       progress=None) -> GridReport:
    """Enclose B on the cells covering (0, 1) x [0.1, 0.9].

    At the reference resolution (ds = 2e-3, dq = 2e-4) the default threshold is
    0.0013; at any other resolution only positivity is required unless a
    ``threshold`` is given.
    """
    if not (ds > 0 and dq > 0):
        raise DomainError("ds and dq must be positive")
    t0 = time.perf_counter()
    ref_res = math.isclose(ds, 2e-3) and math.isclose(dq, 2e-4)
    if threshold is None and ref_res:
        threshold = SECOND_THRESHOLD
    positivity = threshold is None
    target = 0.0 if positivity else threshold
    si = rational_cells(_F(0), _F(1), _F(repr(ds)))
    qi = rational_cells(_F(1, 10), _F(9, 10), _F(repr(dq)))
    nq = qi.lo.size
    tasks = [
        (si.lo, si.hi, qi.lo[a:a + chunk_q], qi.hi[a:a + chunk_q], target, positivity, max_depth)
        for a in range(0, nq, chunk_q)
    ]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_second_chunk, tasks))
    else:
        results = []
        for i, t in enumerate(tasks):
            results.append(_second_chunk(t))
            if progress:
                progress(i + 1, len(tasks))
    # deterministic reduction: min lo, ties by chunk order then cell index
    best = min(range(len(results)), key=lambda i: (results[i][0], i))
    min_lo, _, k, _, _ = results[best]
    min_hi = min(r[1] for r in results)
    width = min(chunk_q, nq - best * chunk_q)
    j, i = divmod(k, width)
    qk = best * chunk_q + i
    worst = {"index": [int(j), int(qk)], "s": [float(si.lo[j]), float(si.hi[j])],
             "q": [float(qi.lo[qk]), float(qi.hi[qk])], "lo": min_lo}
    passed = min_lo > 0.0 if positivity else min_lo >= threshold
    return GridReport(
        grid_spec={"s": [0, 1], "q": [0.1, 0.9], "ds": ds, "dq": dq, "n_s": int(si.lo.size),
                   "n_q": int(nq), "max_depth": max_depth, "form": "centered"},
        threshold=threshold,
        min_lo=min_lo,
        min_hi=min_hi,
        worst_cell=worst,
        cells=int(si.lo.size * nq),
        elapsed_ms=(time.perf_counter() - t0) * 1e3,
        passed=bool(passed),
        details={"refined_cells": int(sum(r[3] for r in results)),
                 "max_depth_used": int(max(r[4] for r in results)),
                 "mode": "positivity" if positivity else "threshold"},
    )
