"""Apsidal angle by three quadrature routes, its q-derivative, and scans.

Routes:

* ``classic_radial``: the angle as an integral in r between the apses;
* ``griffin``: the same integral in z = 1/r written through w(z);
* ``fixed_endpoint``: the integral over s in (0, 1) with kernel E(s, q).

The first two have inverse-square-root endpoint singularities, removed by
``r = r_endpoint +- t**2`` on each side of the circular radius.  The third
uses ``s = (1 - cos u) / 2``, which absorbs the weight ``(s(1-s))**-1/2``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import series
from ._quad import adaptive_gl
from .central_force import (
    ApsisPair,
    OrbitConfig,
    PotentialSpec,
    apses,
    check_energy,
    circular_radius,
    ell_max,
    griffin_w,
)
from .errors import ApsisError, DomainError

Method = Literal["classic_radial", "griffin", "fixed_endpoint"]
METHODS = ("classic_radial", "griffin", "fixed_endpoint")
Q_CAP = 1.0 - 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    method: Method = "fixed_endpoint"
    abs_tol: float = 1e-10
    max_panels: int = 20000

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if self.max_panels < 4:
            raise DomainError("max_panels must be >= 4")


@dataclass(frozen=True)
class AngleResult:
    angle: float
    method: str
    error_estimate: float
    q_used: float
    ell_used: float | None = None
    energy_used: float | None = None

    def as_dict(self) -> dict:
        return {
            "angle": self.angle,
            "method": self.method,
            "error_estimate": self.error_estimate,
            "q_used": self.q_used,
            "ell_used": self.ell_used,
            "energy_used": self.energy_used,
        }


@dataclass(frozen=True)
class ScanRow:
    ell: float
    q: float
    angle: float
    d_angle_dq: float
    d_angle_dell_sign: int
    error: str | None = None


@dataclass
class ScanResult:
    rows: list[ScanRow] = field(default_factory=list)
    increasing: bool = False

    @property
    def failed_rows(self) -> list[ScanRow]:
        return [r for r in self.rows if r.error is not None]


def _quad(quad: QuadratureSpec | None, method: str, abs_tol: float = 1e-10) -> QuadratureSpec:
    if quad is None:
        return QuadratureSpec(method, abs_tol)
    return quad


# -- classic radial route ---------------------------------------------------------


def _delta_v_over_x(spec: PotentialSpec, r0: float, x):
    """(V(r0 (1+x)) - V(r0)) / x, finite at x = 0."""
    lx = np.log1p(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        if spec.is_log:
            out = -lx / x
            lim = -1.0
        else:
            a = spec.alpha
            out = r0 ** (-a) / a * np.expm1(-a * lx) / x
            lim = -(r0 ** (-a))
    return np.where(x == 0, lim, out)


def _g_over_t2(spec, orbit, r0, sigma, t):
    """(2(E + V(r)) - ell^2/r^2) / t^2 at r = r0 + sigma t^2, using g(r0) = 0."""
    t2 = t * t
    r = r0 + sigma * t2
    x = sigma * t2 / r0
    ell2 = orbit.ell ** 2
    return sigma * (2.0 * _delta_v_over_x(spec, r0, x) / r0 + ell2 * (r + r0) / (r * r * r0 * r0)), r


def _radial_halves(spec, orbit, pair: ApsisPair, weight_fn, tol, max_panels):
    rc = circular_radius(spec, orbit.ell)
    total, err, panels = 0.0, 0.0, 0
    for r0, sigma, span in ((pair.r_minus, 1.0, rc - pair.r_minus), (pair.r_plus, -1.0, pair.r_plus - rc)):
        def f(t, r0=r0, sigma=sigma):
            g, r = _g_over_t2(spec, orbit, r0, sigma, t)
            return 2.0 * weight_fn(r) / np.sqrt(g)

        out = adaptive_gl(f, 0.0, math.sqrt(span), 0.5 * tol, max_panels // 2)
        total += out.value
        err += out.error
        panels += out.panels
    return total, err


def apsidal_angle_classic(spec: PotentialSpec, orbit: OrbitConfig,
                          quad: QuadratureSpec | None = None) -> AngleResult:
    """int_{r-}^{r+} ell / (r^2 sqrt(2(E+V) - ell^2/r^2)) dr."""
    quad = _quad(quad, "classic_radial")
    pair = apses(spec, orbit)
    ell = orbit.ell
    val, err = _radial_halves(spec, orbit, pair, lambda r: ell / (r * r), quad.abs_tol, quad.max_panels)
    return AngleResult(val, "classic_radial", err, pair.q, orbit.ell, orbit.energy)


def radial_period(spec: PotentialSpec, orbit: OrbitConfig, tol: float = 1e-12) -> float:
    """Time from pericenter back to pericenter."""
    pair = apses(spec, orbit)
    val, _ = _radial_halves(spec, orbit, pair, lambda r: np.ones_like(r), tol, 20000)
    return 2.0 * val


# -- Griffin route -------------------------------------------------------------------


def _dw(spec: PotentialSpec, base: float, h):
    """(w(base + h) - w(base)) / h, finite at h = 0."""
    lx = np.log1p(h / base)
    with np.errstate(invalid="ignore", divide="ignore"):
        if spec.is_log:
            out = 2.0 * lx / h
            lim = 2.0 / base
        else:
            a = spec.alpha
            out = 2.0 / a * base ** a * np.expm1(a * lx) / h
            lim = 2.0 * base ** (a - 1.0)
    return np.where(h == 0, lim, out)


def apsidal_angle_griffin(spec: PotentialSpec, orbit: OrbitConfig,
                          quad: QuadratureSpec | None = None) -> AngleResult:
    """Integral over z = 1/r in [a, b] with the w(z) denominator."""
    quad = _quad(quad, "griffin")
    pair = apses(spec, orbit)
    a, b = pair.a, pair.b
    L = b - a
    dwab = float(_dw(spec, a, np.float64(L))) * L  # w(b) - w(a)
    if not dwab > 0 or griffin_w(spec, b) <= griffin_w(spec, a):
        raise DomainError("w(b) - w(a) must be positive")
    zc = 1.0 / circular_radius(spec, orbit.ell)
    k = math.sqrt(dwab)
    bb_aa = (b - a) * (b + a)

    def near_a(t):
        h = t * t
        z = a + h
        d = bb_aa * _dw(spec, a, h) - (z + a) * dwab
        return 2.0 * k / np.sqrt(d)

    def near_b(t):
        h = t * t
        z = b - h
        d = (b + z) * dwab - bb_aa * _dw(spec, b, -h)
        return 2.0 * k / np.sqrt(d)

    o1 = adaptive_gl(near_a, 0.0, math.sqrt(zc - a), 0.5 * quad.abs_tol, quad.max_panels // 2)
    o2 = adaptive_gl(near_b, 0.0, math.sqrt(b - zc), 0.5 * quad.abs_tol, quad.max_panels // 2)
    return AngleResult(o1.value + o2.value, "griffin", o1.error + o2.error, pair.q, orbit.ell, orbit.energy)


# -- fixed-endpoint route ----------------------------------------------------------------


def _check_q(q: float) -> float:
    q = float(q)
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    if q > Q_CAP:
        raise DomainError(f"q={q!r} exceeds the supported cap 1 - 1e-12")
    return q


def _s_of_u(u):
    # s = (1 - cos u)/2 = sin(u/2)^2, no cancellation near u = 0
    return np.clip(np.sin(0.5 * u) ** 2, 0.0, 1.0)


def apsidal_angle_fixed(spec: PotentialSpec | float, q: float,
                        quad: QuadratureSpec | None = None) -> AngleResult:
    """int_0^1 ds / (sqrt(s(1-s)) sqrt(1 + E(s, q)))."""
    alpha = _alpha_of(spec)
    q = _check_q(q)
    quad = _quad(quad, "fixed_endpoint")
    if alpha == 1:
        return AngleResult(math.pi, "fixed_endpoint", 0.0, q)

    def f(u):
        return 1.0 / np.sqrt(1.0 + series.kernel(alpha, _s_of_u(u), q))

    out = adaptive_gl(f, 0.0, math.pi, quad.abs_tol, quad.max_panels)
    return AngleResult(out.value, "fixed_endpoint", out.error, q)


def apsidal_derivative(spec: PotentialSpec | float, q: float,
                       quad: QuadratureSpec | None = None) -> float:
    """d(angle)/dq = -1/2 int (s(1-s))^-1/2 dE/dq (1+E)^-3/2 ds."""
    alpha = _alpha_of(spec)
    q = _check_q(q)
    quad = _quad(quad, "fixed_endpoint", 1e-8)
    if alpha == 1:
        return 0.0

    def f(u):
        s = _s_of_u(u)
        e = series.kernel(alpha, s, q)
        return -0.5 * series.kernel_dq(alpha, s, q) / (1.0 + e) ** 1.5

    return adaptive_gl(f, 0.0, math.pi, quad.abs_tol, quad.max_panels).value


def _alpha_of(spec) -> float:
    if isinstance(spec, PotentialSpec):
        return spec.alpha
    a = float(spec)
    if not -2 <= a <= 1:
        raise DomainError(f"alpha must lie in [-2, 1], got {a!r}")
    return a


def apsidal_angle(spec: PotentialSpec, orbit: OrbitConfig, method: Method,
                  quad: QuadratureSpec | None = None) -> AngleResult:
    """Dispatch by method; the fixed route takes q from the apses."""
    if method == "classic_radial":
        return apsidal_angle_classic(spec, orbit, quad)
    if method == "griffin":
        return apsidal_angle_griffin(spec, orbit, quad)
    if method == "fixed_endpoint":
        pair = apses(spec, orbit)
        r = apsidal_angle_fixed(spec, pair.q, quad)
        return AngleResult(r.angle, r.method, r.error_estimate, pair.q, orbit.ell, orbit.energy)
    raise DomainError(f"unknown method {method!r}")


def limit_angles(alpha: float) -> tuple[float, float]:
    """(radial limit q -> 1, circular limit q -> 0) of the angle."""
    if not 0 <= alpha < 1:
        raise DomainError("limit_angles needs alpha in [0, 1)")
    return math.pi / (2.0 - alpha), math.pi / math.sqrt(2.0 - alpha)


# -- scans -----------------------------------------------------------------------------


def _scan_row(spec, energy, ell, quad):
    try:
        pair = apses(spec, OrbitConfig(energy, ell))
        q = pair.q
        ang = apsidal_angle_fixed(spec, q, quad).angle
        der = apsidal_derivative(spec, q)
        return ScanRow(ell, q, ang, der, -int(np.sign(der)))
    except ApsisError as exc:
        nan = float("nan")
        return ScanRow(ell, nan, nan, nan, 0, f"{type(exc).__name__}: {exc}")


def scan(spec: PotentialSpec, energy: float, n_points: int,
         quad: QuadratureSpec | None = None, workers: int = 1) -> ScanResult:
    """Angle and dAngle/dq on ell_i = ell_max * i / (n + 1), i = 1..n.

    The verdict ``increasing`` holds iff every row succeeded, consecutive
    angles strictly increase with ell, and every dAngle/dq is negative.
    """
    if n_points < 3:
        raise DomainError("scan needs at least 3 points")
    check_energy(spec, energy)
    lmax = ell_max(spec, energy)
    ells = [lmax * i / (n_points + 1) for i in range(1, n_points + 1)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(lambda l: _scan_row(spec, energy, l, quad), ells))
    else:
        rows = [_scan_row(spec, energy, l, quad) for l in ells]
    ok = all(r.error is None for r in rows)
    ok = ok and all(r2.angle > r1.angle for r1, r2 in zip(rows, rows[1:]))
    ok = ok and all(r.d_angle_dq < 0 for r in rows)
    return ScanResult(rows, bool(ok))
