"""Central-force potentials, effective potentials and apses.

Two families of attractive laws are covered:

* homogeneous, ``V(r) = r**(-alpha) / alpha`` with ``alpha`` in [-2, 1], alpha != 0
  (alpha = 1 is Kepler, alpha = -2 the harmonic oscillator);
* logarithmic, ``V(r) = -log(r)`` (the alpha = 0 member of the family).

Energies follow the convention ``E = |v|**2 / 2 - V``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from scipy.optimize import brentq

from .errors import DomainError, NoOscillationError, NumericError, RegimeError

HOMOGENEOUS = "homogeneous"
LOGARITHMIC = "logarithmic"

_LN10 = math.log(10.0)
_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class PotentialSpec:
    """Force law selector. Use :meth:`homogeneous` / :meth:`logarithmic`."""

    kind: Literal["homogeneous", "logarithmic"]
    exponent: float = 0.0

    def __post_init__(self):
        if self.kind == LOGARITHMIC:
            if self.exponent != 0.0:
                raise DomainError("logarithmic potential carries no exponent")
        elif self.kind == HOMOGENEOUS:
            a = self.exponent
            if not math.isfinite(a) or a < -2.0 or a > 1.0 or a == 0.0:
                raise DomainError(f"homogeneous exponent must lie in [-2, 1] \\ {{0}}, got {a!r}")
        else:
            raise DomainError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def homogeneous(cls, alpha: float) -> "PotentialSpec":
        return cls(HOMOGENEOUS, float(alpha))

    @classmethod
    def logarithmic(cls) -> "PotentialSpec":
        return cls(LOGARITHMIC, 0.0)

    @classmethod
    def from_alpha(cls, alpha: float) -> "PotentialSpec":
        """alpha == 0 selects the logarithmic law."""
        return cls.logarithmic() if alpha == 0 else cls.homogeneous(alpha)

    @property
    def alpha(self) -> float:
        return self.exponent

    @property
    def is_log(self) -> bool:
        return self.kind == LOGARITHMIC

    def potential(self, r: float) -> float:
        if self.is_log:
            return -math.log(r)
        return r ** (-self.exponent) / self.exponent

    def label(self) -> str:
        return "log" if self.is_log else f"alpha={self.exponent:g}"


@dataclass(frozen=True)
class OrbitConfig:
    """Energy and (positive) scalar angular momentum of one orbit."""

    energy: float
    ell: float

    def __post_init__(self):
        if not (math.isfinite(self.energy) and math.isfinite(self.ell)):
            raise DomainError("energy and ell must be finite")
        if self.ell <= 0:
            raise DomainError(f"ell must be positive, got {self.ell!r}")


@dataclass(frozen=True)
class ApsisPair:
    r_minus: float
    r_plus: float

    @property
    def a(self) -> float:
        return 1.0 / self.r_plus

    @property
    def b(self) -> float:
        return 1.0 / self.r_minus

    @property
    def L(self) -> float:
        return self.b - self.a

    @property
    def q(self) -> float:
        return (self.r_plus - self.r_minus) / self.r_plus


def effective_potential(spec: PotentialSpec, ell: float, r: float) -> float:
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r!r}")
    return 0.5 * ell * ell / (r * r) - spec.potential(r)


def check_energy(spec: PotentialSpec, energy: float) -> None:
    a = spec.alpha
    if a > 0 and not energy < 0:
        raise RegimeError(f"{spec.label()}: bounded orbits need E < 0, got {energy!r}")
    if a < 0 and not energy > 0:
        raise RegimeError(f"{spec.label()}: bounded orbits need E > 0, got {energy!r}")


def ell_max(spec: PotentialSpec, energy: float) -> float:
    check_energy(spec, energy)
    if spec.is_log:
        return math.exp(energy - 0.5)
    a = spec.alpha
    return (2.0 * a / (a - 2.0) * energy) ** (-(2.0 - a) / (2.0 * a))


def circular_radius(spec: PotentialSpec, ell: float) -> float:
    if not ell > 0:
        raise DomainError(f"ell must be positive, got {ell!r}")
    if spec.is_log:
        return ell
    return ell ** (2.0 / (2.0 - spec.alpha))


def check_admissible(spec: PotentialSpec, orbit: OrbitConfig) -> None:
    lmax = ell_max(spec, orbit.energy)
    if orbit.ell >= lmax:
        raise NoOscillationError(
            f"ell={orbit.ell!r} >= ell_max={lmax!r}: no radial oscillation"
        )


def apses_residual(spec: PotentialSpec, orbit: OrbitConfig, r: float) -> float:
    return effective_potential(spec, orbit.ell, r) - orbit.energy


def _scaled_apses_fn(spec: PotentialSpec, orbit: OrbitConfig):
    # r**2 * (apses equation) as a function of x = log r; same roots, tamer growth
    ell2 = 0.5 * orbit.ell ** 2
    E = orbit.energy
    if spec.is_log:
        return lambda x: ell2 - math.exp(2.0 * x) * (E - x)
    a = spec.alpha
    return lambda x: ell2 - math.exp((2.0 - a) * x) / a - E * math.exp(2.0 * x)


def apses(spec: PotentialSpec, orbit: OrbitConfig, tol: float = 1e-12) -> ApsisPair:
    """Pericenter and apocenter radii.

    Brackets each root on its side of the circular radius by decades and
    refines with Brent's method in ``log r``.  The residual check is relative
    to the size of the terms of the apses equation.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    check_admissible(spec, orbit)
    rc = circular_radius(spec, orbit.ell)
    xc = math.log(rc)
    h = _scaled_apses_fn(spec, orbit)
    hc = h(xc)
    if not hc < 0:
        raise NoOscillationError(
            "effective potential minimum is not below the energy", value_at_rc=hc
        )

    def bracket(sign):
        for k in range(1, 330):
            x = xc + sign * k * _LN10
            try:
                hv = h(x)
            except OverflowError:
                break
            if hv > 0:
                return x
        raise NumericError(
            "could not bracket apsis",
            side="inner" if sign < 0 else "outer",
            r_c=rc,
            energy=orbit.energy,
            ell=orbit.ell,
        )

    roots = []
    for sign in (-1, 1):
        x_far = bracket(sign)
        lo, hi = (x_far, xc) if sign < 0 else (xc, x_far)
        x = brentq(h, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=500)
        r = math.exp(x)
        res = apses_residual(spec, orbit, r)
        scale = max(1.0, 0.5 * orbit.ell ** 2 / r ** 2, abs(spec.potential(r)), abs(orbit.energy))
        if abs(res) > tol * scale:
            raise NumericError("apsis residual above tolerance", r=r, residual=res, tol=tol)
        roots.append(r)
    return ApsisPair(roots[0], roots[1])


def lambert_w(branch: str, x: float) -> float:
    """Real Lambert W by Halley iteration.

    ``branch`` is ``"principal"`` (W >= -1) or ``"lower"`` (W <= -1, x in [-1/e, 0)).
    """
    if branch not in ("principal", "lower"):
        raise DomainError(f"unknown branch {branch!r}")
    x = float(x)
    t = 1.0 + math.e * x
    if t < -1e-15:
        raise DomainError(f"Lambert W undefined for x={x!r} < -1/e")
    if t <= 1e-15:
        return -1.0
    if branch == "principal":
        if x == 0.0:
            return 0.0
        if x < -0.25:
            p = math.sqrt(2.0 * t)
            w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
        elif x < 3.0:
            w = math.log1p(x)
        else:
            l1 = math.log(x)
            l2 = math.log(l1)
            w = l1 - l2 + l2 / l1
    else:
        if x >= 0.0:
            raise DomainError("lower branch needs x in [-1/e, 0)")
        if x < -0.25:
            p = math.sqrt(2.0 * t)
            w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p ** 3
        else:
            l1 = math.log(-x)
            l2 = math.log(-l1)
            w = l1 - l2 + l2 / l1
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        w1 = w + 1.0
        if w1 == 0.0:
            break
        dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= dw
        if abs(dw) <= 1e-15 * (1.0 + abs(w)):
            break
    if branch == "principal":
        return max(w, -1.0)
    return min(w, -1.0)


def lambert_apses(energy: float, ell: float) -> ApsisPair:
    """Logarithmic-law apses from both real Lambert W branches.

    Inverse radii solve ``log(z**2) - ell**2 z**2 = -2E``, i.e.
    ``z = sqrt(-W(-ell**2 exp(-2E))) / ell``.
    """
    if not ell > 0:
        raise DomainError("ell must be positive")
    x = -ell * ell * math.exp(-2.0 * energy)
    if 1.0 + math.e * x < -1e-15:
        raise NoOscillationError(f"ell={ell!r} exceeds ell_max={math.exp(energy - 0.5)!r}")
    z_small = math.sqrt(-lambert_w("principal", x)) / ell
    z_big = math.sqrt(-lambert_w("lower", x)) / ell
    return ApsisPair(1.0 / z_big, 1.0 / z_small)


def griffin_w(spec: PotentialSpec, z):
    """w(z) = 2 * integral of z**2 * force(1/z); increasing for every law in scope."""
    if spec.is_log:
        return 2.0 * math.log(z)
    a = spec.alpha
    return 2.0 / a * z ** a


def scaling_pair(alpha: float) -> tuple[float, float]:
    """Dual exponent beta and factor with angle_beta = factor * angle_alpha."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError("scaling_pair needs alpha in (0, 1]")
    return -2.0 * alpha / (2.0 - alpha), (2.0 - alpha) / 2.0
