"""Brute-force orbit integration used as an independent oracle.

The planar Cartesian system is integrated with an embedded 8(5,3)
Runge-Kutta scheme (scipy's DOP853) together with the polar angle,
``theta' = (x v_y - y v_x) / r**2``.  Apsis passages are the zeros of
``x v_x + y v_y``, located on the dense output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np
from scipy.integrate import solve_ivp

from .apsidal import radial_period
from .central_force import OrbitConfig, PotentialSpec, check_admissible, circular_radius
from .errors import DomainError, NumericError


@dataclass(frozen=True)
class ApsisEvent:
    t: float
    r: float
    theta: float
    kind: str  # "peri" or "apo"


@dataclass
class Trajectory:
    spec: PotentialSpec
    orbit: OrbitConfig
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    theta: np.ndarray
    events: list[ApsisEvent] = field(default_factory=list)

    @property
    def r(self) -> np.ndarray:
        return np.hypot(self.x, self.y)

    @property
    def rdot(self) -> np.ndarray:
        return (self.x * self.vx + self.y * self.vy) / self.r

    @property
    def thetadot(self) -> np.ndarray:
        return (self.x * self.vy - self.y * self.vx) / self.r ** 2

    @property
    def ell(self) -> np.ndarray:
        return self.x * self.vy - self.y * self.vx

    @property
    def energy(self) -> np.ndarray:
        r = self.r
        v2 = self.vx ** 2 + self.vy ** 2
        if self.spec.is_log:
            pot = -np.log(r)
        else:
            pot = r ** (-self.spec.alpha) / self.spec.alpha
        return 0.5 * v2 - pot

    def max_energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.orbit.energy)))

    def max_ell_drift(self) -> float:
        return float(np.max(np.abs(self.ell - self.orbit.ell)))


def _rhs(spec: PotentialSpec):
    p = 2.0 if spec.is_log else spec.alpha + 2.0

    def f(_t, u):
        x, y, vx, vy, _ = u
        r2 = x * x + y * y
        k = r2 ** (-0.5 * p)
        return [vx, vy, -k * x, -k * y, (x * vy - y * vx) / r2]

    return f


def integrate_orbit(spec: PotentialSpec, orbit: OrbitConfig, duration: float | None = None,
                    tol: float = 1e-11, periods: float = 3.0, n_samples: int = 2001) -> Trajectory:
    """Integrate from the circular radius with outward radial velocity.

    ``duration`` defaults to ``periods`` radial periods.
    """
    check_admissible(spec, orbit)
    rc = circular_radius(spec, orbit.ell)
    vt = orbit.ell / rc
    vr2 = 2.0 * (orbit.energy + spec.potential(rc)) - vt * vt
    if not vr2 > 0:
        raise NumericError("no radial velocity at the circular radius", vr2=vr2)
    vr = math.sqrt(vr2)
    if duration is None:
        duration = periods * radial_period(spec, orbit)
    if not duration > 0:
        raise DomainError("duration must be positive")

    def ev(_t, u):
        return u[0] * u[2] + u[1] * u[3]

    sol = solve_ivp(
        _rhs(spec),
        (0.0, duration),
        [rc, 0.0, vr, vt, 0.0],
        method="DOP853",
        rtol=tol,
        atol=tol * min(1.0, rc),
        dense_output=True,
        events=ev,
        t_eval=np.linspace(0.0, duration, n_samples),
    )
    if sol.status != 0:
        raise NumericError("orbit integration failed", message=sol.message, t=float(sol.t[-1]))
    events = []
    for te, ye in zip(sol.t_events[0], sol.y_events[0]):
        r = math.hypot(ye[0], ye[1])
        events.append(ApsisEvent(float(te), r, float(ye[4]), "peri" if r < rc else "apo"))
    x, y, vx, vy, th = sol.y
    return Trajectory(spec, orbit, sol.t, x, y, vx, vy, th, events)


def empirical_apsidal_angle(traj: Trajectory) -> float:
    """Mean angle swept between consecutive apsis passages."""
    ev = traj.events
    if len(ev) < 2:
        raise NumericError("need at least two apsis events", events=len(ev))
    for a, b in zip(ev, ev[1:]):
        if a.kind == b.kind:
            raise NumericError("apsis events do not alternate", t=b.t)
    d = np.diff([e.theta for e in ev])
    return float(np.mean(np.abs(d)))


def write_csv(traj: Trajectory, fh: IO[str]) -> None:
    """Columns t, x, y, r, theta, energy, ell at 17 significant digits."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "x", "y", "r", "theta", "energy", "ell"])
    cols = (traj.t, traj.x, traj.y, traj.r, traj.theta, traj.energy, traj.ell)
    for row in zip(*cols):
        w.writerow(["%.17g" % v for v in row])
