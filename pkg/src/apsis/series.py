"""Series machinery for the fixed-endpoint apsidal kernel.

The kernel ``E(s, q)`` is the function under the square root of the
fixed-endpoint apsidal integral ``int_0^1 ds / sqrt(s(1-s)(1+E(s,q)))``.
Writing ``phi(y) = 1 - (1-y)**alpha`` (``-log(1-y)`` when alpha = 0), whose
Taylor coefficients are the positive weights ``omega_n``, gives

    E(s, q) = (2-q) * sum_{n>=2} omega_n q**(n-2) A_n(s) / sum_{n>=1} omega_n q**(n-1)

with ``A_n(s) = sum_{k=0}^{n-2} (1-s)**k``.  Everything here is either that
series, its q-derivative, a closed form of them, or an auxiliary quantity
used in the monotonicity argument for the logarithmic case.

Scalars that are ``fractions.Fraction`` are evaluated exactly where the
operation allows it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, TruncationError

EPS = np.finfo(float).eps
Q_SERIES_MAX = 0.999
N_MAX = 20000
# below this q the kernels use the positive series, above it the closed forms
Q_SWITCH = 0.5


@dataclass(frozen=True)
class Truncation:
    max_order: int
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.max_order < 2:
            raise DomainError("max_order must be >= 2")
        if not self.tail_bound >= 0:
            raise DomainError("tail_bound must be >= 0")


def _is_exact(x) -> bool:
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


def _check_alpha(alpha) -> None:
    if not 0 <= alpha < 1:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha!r}")


# -- weights ------------------------------------------------------------------


def weight(alpha, n: int):
    """omega_n: Taylor coefficient of 1-(1-y)**alpha (1/n for alpha = 0)."""
    _check_alpha(alpha)
    if n < 1:
        raise DomainError(f"weight index must be >= 1, got {n}")
    if alpha == 0:
        return Fraction(1, n) if _is_exact(alpha) else 1.0 / n
    w = Fraction(alpha) if _is_exact(alpha) else float(alpha)
    for k in range(1, n):
        w = w * (k - alpha) / (k + 1)
    return w


@lru_cache(maxsize=256)
def _scaled_weights_cached(alpha: float, N: int) -> tuple:
    # omega_n / alpha (omega_n itself for alpha = 0): no underflow for tiny alpha
    w = np.zeros(N + 1)
    w[1] = 1.0
    for k in range(1, N):
        w[k + 1] = w[k] * (k - alpha) / (k + 1)
    return tuple(w)


def _scaled_weights(alpha: float, N: int) -> np.ndarray:
    """``omega_n / alpha`` for alpha != 0, ``omega_n`` for alpha = 0.

    The kernel and its q-derivative are ratios that do not see this common
    factor, and the scaled weights run continuously into 1/n as alpha -> 0.
    """
    return np.array(_scaled_weights_cached(float(alpha), int(N)))


def weights(alpha: float, N: int) -> np.ndarray:
    """Array ``w`` with ``w[n] = omega_n`` for n = 1..N (``w[0] = 0``)."""
    w = _scaled_weights(alpha, N)
    return w if alpha == 0 else float(alpha) * w


def _weight_bound(alpha: float) -> float:
    # scaled weights satisfy omega_n / alpha <= 1 / n for alpha in [0, 1)
    return 1.0


# -- A_n, K_n -------------------------------------------------------------------


def a_fn(n: int, s):
    """A_n(s) = (1 - (1-s)**(n-1)) / s, evaluated as a geometric sum."""
    if n < 2:
        raise DomainError("A_n needs n >= 2")
    if _is_exact(s):
        x = 1 - Fraction(s)
        return sum((x ** k for k in range(n - 1)), Fraction(0))
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.expm1((n - 1) * np.log1p(-s)) / s
    out = np.where(s == 0, n - 1.0, out)
    return out if out.ndim else float(out)


def a_matrix(s, N: int) -> np.ndarray:
    """``A[i, n] = A_n(s_i)`` for n = 2..N (columns 0, 1 are zero)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    x = 1.0 - s
    out = np.zeros((s.size, N + 1))
    term = np.ones_like(s)
    acc = np.zeros_like(s)
    for n in range(2, N + 1):
        acc = acc + term
        out[:, n] = acc
        term = term * x
    return out


def a_prime(n: int, s):
    """dA_n/ds in closed form (numerator formula), s in (0, 1]."""
    s = np.asarray(s, dtype=float)
    x = 1.0 - s
    return (-1.0 + x ** (n - 1) + (n - 1) * x ** (n - 2) * s) / s ** 2


def a_second(n: int, s):
    s = np.asarray(s, dtype=float)
    x = 1.0 - s
    num = 2.0 - 2.0 * x ** (n - 1) - 2.0 * (n - 1) * x ** (n - 2) * s
    if n >= 3:
        num = num - (n - 2) * (n - 1) * x ** (n - 3) * s * s
    return num / s ** 3


def k_fn(alpha, n: int, s):
    """K_n(s) = 2 (n-alpha)/(n+1) A_{n+1}(s) - A_n(s)."""
    _check_alpha(alpha)
    if n < 2:
        raise DomainError("K_n needs n >= 2")
    if _is_exact(alpha) and _is_exact(s):
        return 2 * (n - Fraction(alpha)) / (n + 1) * a_fn(n + 1, s) - a_fn(n, s)
    return 2.0 * (n - alpha) / (n + 1) * a_fn(n + 1, s) - a_fn(n, s)


def k_gap(alpha, n: int, s):
    """K_{n+1}(s) - K_n(s)."""
    return k_fn(alpha, n + 1, s) - k_fn(alpha, n, s)


def g_fn(n: int, s):
    """(n-1)/n K_n^0(s) - (n-3)/(2(n-1)) K_2^0(s)."""
    if n < 2:
        raise DomainError("g_n needs n >= 2")
    if _is_exact(s):
        return Fraction(n - 1, n) * k_fn(0, n, s) - Fraction(n - 3, 2 * (n - 1)) * k_fn(0, 2, s)
    return (n - 1) / n * k_fn(0, n, s) - (n - 3) / (2.0 * (n - 1)) * k_fn(0, 2, s)


# -- closed forms -----------------------------------------------------------------


def _phi(alpha, y):
    """phi(y) / alpha, with phi(y) = 1 - (1-y)**alpha (-log(1-y) for alpha = 0)."""
    ly = np.log1p(-y)
    if alpha == 0:
        return -ly
    x = alpha * ly
    if abs(alpha) < 1e-5:
        # expm1(x)/alpha loses digits once alpha*ly is subnormal
        return -ly * (1.0 + x / 2.0 * (1.0 + x / 3.0 * (1.0 + x / 4.0)))
    return -np.expm1(x) / alpha


def _dphi(alpha, y):
    if alpha == 0:
        return 1.0 / (1.0 - y)
    return (1.0 - y) ** (alpha - 1.0)


def _d2phi(alpha, y):
    if alpha == 0:
        return 1.0 / (1.0 - y) ** 2
    return (1.0 - alpha) * (1.0 - y) ** (alpha - 2.0)


def _check_sq(s, q, closed_s=True):
    s = np.asarray(s, dtype=float)
    lo_ok = np.all(s >= 0) if closed_s else np.all(s > 0)
    if not (lo_ok and np.all(s <= 1)):
        raise DomainError("s must lie in [0, 1]")
    q = float(q)
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    return s, q


def _check_kernel_alpha(alpha):
    if not -2 <= alpha <= 1:
        raise DomainError(f"alpha must lie in [-2, 1], got {alpha!r}")


def _expm1_over(alpha, x):
    """expm1(alpha x) / alpha, accurate for tiny alpha."""
    if abs(alpha) < 1e-5:
        ax = alpha * x
        return x * (1.0 + ax / 2.0 * (1.0 + ax / 3.0 * (1.0 + ax / 4.0)))
    return np.expm1(alpha * x) / alpha


def _t_and_dt(alpha, s, q):
    """T = sum_{n>=2} omega_n q**n A_n(s) and its q-derivative, closed form.

    Both are computed without cancellation in s: the s <= 1/2 half expands
    around s = 0 through log1p(q s / (1-q)), the other half around s = 1.
    Everything carries the common factor 1/alpha of :func:`_phi`.
    """
    x = 1.0 - s
    ph = _phi(alpha, q)
    dph = _dphi(alpha, q)
    u = q * s / (1.0 - q)
    lu = np.log1p(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        if alpha == 0:
            d_over_s = lu / s
            dt = q / ((1.0 - q) * (1.0 - q * x))
        else:
            c = (1.0 - q) ** alpha
            d_over_s = c * _expm1_over(alpha, lu) / s
            dt = -((1.0 - q) ** (alpha - 1.0)) * np.expm1((alpha - 1.0) * lu) / s
        t_low = (d_over_s - ph) / x
        t_high = (ph - _phi(alpha, q * x) / x) / s
    t = np.where(s <= 0.5, t_low, t_high)
    # endpoint limits
    t = np.where(s == 0, q * dph - ph, t)
    t = np.where(s == 1, ph - q * _dphi(alpha, 0.0), t)
    dt = np.where(s == 0, q * _d2phi(alpha, q), dt)
    dt = np.where(s == 1, dph - _dphi(alpha, 0.0), dt)
    return t, dt, ph, dph


def e_closed(alpha, s, q):
    """Kernel E(s, q) from its closed form (alpha in [-2, 1]; 0 means log).

    Vectorised in ``s``; identically zero for alpha = 1.
    """
    _check_kernel_alpha(alpha)
    s_arr, q = _check_sq(s, q)
    if alpha == 1:
        out = np.zeros_like(s_arr)
    else:
        t, _, ph, _ = _t_and_dt(alpha, s_arr, q)
        out = (2.0 - q) * t / (q * ph)
    return out if out.ndim else float(out)


def de_dq_closed(alpha, s, q):
    """q-derivative of E(s, q) from the closed form."""
    _check_kernel_alpha(alpha)
    s_arr, q = _check_sq(s, q)
    if alpha == 1:
        out = np.zeros_like(s_arr)
    else:
        t, dt, ph, dph = _t_and_dt(alpha, s_arr, q)
        out = (-t + (2.0 - q) * dt - (2.0 - q) * t * (1.0 / q + dph / ph)) / (q * ph)
    return out if out.ndim else float(out)


def e_at_one(alpha, q):
    """E(1, q) (printed boundary form); q may be an array."""
    q = np.asarray(q, dtype=float)
    if alpha == 0:
        out = 2.0 / q - 1.0 + (2.0 - q) / np.log1p(-q)
    else:
        c = (1.0 - q) ** alpha
        out = (2.0 - q) / q * (1.0 - c - alpha * q) / (1.0 - c)
    return out if out.ndim else float(out)


def e_at_zero(alpha, q):
    """E(0, q) (printed boundary form for alpha = 0)."""
    q = np.asarray(q, dtype=float)
    if alpha == 0:
        out = 1.0 - 2.0 / q - (2.0 - q) / ((1.0 - q) * np.log1p(-q))
    else:
        out = (2.0 - q) / q * (q * _dphi(alpha, q) / _phi(alpha, q) - 1.0)
    return out if out.ndim else float(out)


def f_limit(q):
    """F(q): limit s -> 1 of dE_0/dq, i.e. d/dq E_0(1, q)."""
    q = np.asarray(q, dtype=float)
    L = np.log1p(-q)
    out = -2.0 / q ** 2 - 1.0 / L + (2.0 - q) / ((1.0 - q) * L ** 2)
    return out if out.ndim else float(out)


def c_alpha(alpha, q):
    """C(q) = (sum_{n>=1} omega_n q**(n-1))**-2."""
    _check_alpha(alpha)
    q = float(q)
    ph = float(_phi(alpha, q)) * (1.0 if alpha == 0 else alpha)
    return (q / ph) ** 2


def m_bound(alpha, q):
    """Printed closed form of M(q) = dE/dq at s = 0."""
    _check_alpha(alpha)
    q = np.asarray(q, dtype=float)
    if alpha == 0:
        L = np.log1p(-q)
        num = q ** 3 - L * q ** 2 - 2 * q ** 2 + 2 * L ** 2 * q ** 2 - 4 * L ** 2 * q + 2 * L ** 2
        out = num / (L ** 2 * q ** 2 * (1 - 2 * q + q ** 2))
    else:
        a = alpha
        c = (1.0 - q) ** a
        num = (
            a ** 2 * c * q ** 3
            + ((2 - a) * c ** 2 + (-2 * a ** 2 + a - 4) * c + 2) * q ** 2
            + (-4 * c ** 2 + 8 * c - 4) * q
            + 2 * (c - 1) ** 2
        )
        out = num / ((c - 1) ** 2 * (q - 1) ** 2 * q ** 2)
    return out if out.ndim else float(out)


# -- truncated series ----------------------------------------------------------------


def _order_for(q: float, tol: float) -> int:
    if q > Q_SERIES_MAX:
        raise TruncationError(f"q={q!r} > {Q_SERIES_MAX}: use the closed forms", q=q)
    target = tol * (1.0 - q) / 4.0
    n = int(math.ceil(math.log(target) / math.log(q))) + 3 if q > 0 else 2
    n = max(n, 4)
    if n > N_MAX:
        raise TruncationError("series order exceeds N_MAX", q=q, order=n)
    return n


def e_series(alpha, s, q, trunc: Truncation | None = None, tol: float = 1e-17):
    """Partial sum of the kernel series and a rigorous bound on its error.

    Returns ``(value, tail)`` with ``|value - E(s, q)| <= tail``; the bound
    covers both the discarded terms (using omega_n <= c/n and
    A_n(s) <= min(n-1, 1/s)) and float rounding of the positive sums.
    """
    _check_alpha(alpha)
    s_arr, q = _check_sq(s, q)
    N = trunc.max_order if trunc is not None else _order_for(q, tol)
    if N > N_MAX:
        raise TruncationError("series order exceeds N_MAX", order=N)
    w = _scaled_weights(alpha, N)
    A = a_matrix(s_arr.ravel(), N)
    n = np.arange(N + 1)
    qp = np.zeros(N + 1)
    qp[2:] = q ** (n[2:] - 2)
    num = (2.0 - q) * (A[:, 2:] @ (w[2:] * qp[2:]))
    den = float(np.sum(w[1:] * q ** (n[1:] - 1)))
    value = num / den
    c = _weight_bound(alpha)
    with np.errstate(divide="ignore"):
        afac = np.minimum(1.0, 1.0 / (s_arr.ravel() * (N + 1)))
    r_num = (2.0 - q) * c * q ** (N - 1) / (1.0 - q) * afac
    r_den = c * q ** N / ((N + 1) * (1.0 - q))
    tail = np.maximum(r_num / den, num * r_den / den ** 2)
    tail = tail + 4.0 * (N + 4) * EPS * np.abs(value) + 1e-300
    value = value.reshape(s_arr.shape)
    tail = tail.reshape(s_arr.shape)
    if value.ndim == 0:
        return float(value), float(tail)
    return value, tail


def _degree_coeffs(alpha, s_flat, P):
    """Per total degree p = n + m: a_p = sum w_n w_m (2(n-m)-2) A_n, b_p = sum w_n w_m (n-m) A_n."""
    w = _scaled_weights(alpha, P)
    A = a_matrix(s_flat, P)
    a_p = np.zeros((s_flat.size, P + 1))
    b_p = np.zeros((s_flat.size, P + 1))
    for p in range(3, P + 1):
        n = np.arange(2, p)
        m = p - n
        ww = w[n] * w[m]
        a_p[:, p] = A[:, n] @ (ww * (2.0 * (n - m) - 2.0))
        b_p[:, p] = A[:, n] @ (ww * (n - m))
    return a_p, b_p


def de_dq(alpha, s, q, trunc: Truncation | None = None, tol: float = 1e-16, *, with_tail: bool = False):
    """q-derivative of the kernel from the double series, with tail bound.

    The double sum over (n, m) is collected by total degree p = n + m up to
    ``trunc.max_order`` and multiplied by C(q).  With ``with_tail=True``
    returns ``(value, tail)`` where ``tail`` bounds the truncation and
    rounding error.
    """
    _check_alpha(alpha)
    s_arr, q = _check_sq(s, q)
    P = trunc.max_order if trunc is not None else _order_for(q, tol * 1e-3) + 10
    if P > 4000:
        raise TruncationError("double series order too large", order=P)
    sf = s_arr.ravel()
    a_p, b_p = _degree_coeffs(alpha, sf, P)
    p = np.arange(P + 1)
    pw_a = np.where(p >= 4, q ** (p - 4.0), 0.0)
    pw_b = q ** np.maximum(p - 3.0, 0.0)
    D = a_p @ pw_a - b_p @ pw_b
    Nw = max(P, _order_for(q, 1e-18))
    w = _scaled_weights(alpha, Nw)
    W = float(np.sum(w[1:] * q ** (np.arange(1, Nw + 1) - 1.0)))
    value = D / W ** 2
    c = _weight_bound(alpha)
    # |a_p| q^(p-4) + |b_p| q^(p-3) <= 3 c^2 p (1 + ln p) q^(p-4)
    k = P + 1
    t_k = 3.0 * c * c * k * (1 + math.log(k)) * q ** (k - 4)
    rho = q * (k + 1) * (1 + math.log(k + 1)) / (k * (1 + math.log(k)))
    tail_D = t_k / (1.0 - rho) if rho < 1 else math.inf
    r_w = c * q ** Nw / ((Nw + 1) * (1.0 - q))
    tail = tail_D / W ** 2 + np.abs(D) * 2.0 * r_w / W ** 3
    scale = (np.abs(a_p) @ np.abs(pw_a) + np.abs(b_p) @ pw_b) / W ** 2
    tail = tail + 8.0 * (P + 4) * EPS * scale + 1e-300
    value = value.reshape(s_arr.shape)
    tail = np.broadcast_to(tail, sf.shape).reshape(s_arr.shape)
    if value.ndim == 0:
        value, tail = float(value), float(tail)
    return (value, tail) if with_tail else value


# -- kernel dispatch used by the quadrature routes ----------------------------------


def _series_any(alpha, s, q):
    # same series for alpha in [-2, 0); scaled weights stay positive
    s_arr, q = _check_sq(s, q)
    N = _order_for(q, 1e-24)
    w = _scaled_weights(alpha, N)
    A = a_matrix(s_arr.ravel(), N)
    n = np.arange(N + 1)
    num = (2.0 - q) * (A[:, 2:] @ (w[2:] * q ** (n[2:] - 2.0)))
    den = float(np.sum(w[1:] * q ** (n[1:] - 1.0)))
    out = (num / den).reshape(s_arr.shape)
    return out if out.ndim else float(out)


def _de_dq_any(alpha, s, q):
    s_arr, q = _check_sq(s, q)
    P = _order_for(q, 1e-24) + 10
    sf = s_arr.ravel()
    a_p, b_p = _degree_coeffs(alpha, sf, P)
    p = np.arange(P + 1)
    D = a_p @ np.where(p >= 4, q ** (p - 4.0), 0.0) - b_p @ q ** np.maximum(p - 3.0, 0.0)
    w = _scaled_weights(alpha, P)
    W = float(np.sum(w[1:] * q ** (p[1:] - 1.0)))
    out = (D / W ** 2).reshape(s_arr.shape)
    return out if out.ndim else float(out)


def kernel(alpha, s, q):
    """E(s, q) for any alpha in [-2, 1]: series for small q, closed form otherwise.

    The closed form loses about eps/q relative accuracy as q -> 0, the series
    converges like q**n, so the switch keeps full precision everywhere.
    """
    _check_kernel_alpha(alpha)
    if alpha < 1 and q <= Q_SWITCH:
        if alpha >= 0:
            return e_series(alpha, s, q)[0]
        return _series_any(alpha, s, q)
    return e_closed(alpha, s, q)


def kernel_dq(alpha, s, q):
    """dE/dq for any alpha in [-2, 1]."""
    _check_kernel_alpha(alpha)
    if alpha < 1 and q <= Q_SWITCH:
        if alpha >= 0:
            return de_dq(alpha, s, q)
        return _de_dq_any(alpha, s, q)
    return de_dq_closed(alpha, s, q)


# -- symmetric auxiliary quantities ----------------------------------------------------


def h_sym(alpha, n: int, m: int):
    """H(n, m) = omega_{n+2} omega_m (n - m)."""
    if n < 1 or m < 1:
        raise DomainError("h_sym needs n, m >= 1")
    return weight(alpha, n + 2) * weight(alpha, m) * (n - m)


def _bracket(a, s, printed):
    if printed:
        return (5 + a) * s ** 2 * a - (5 + a) * s + a + 2
    return (5 + a) * s ** 2 - (5 + a) * s + a + 2


def coef_poly(alpha, s, p: int, *, corrected: bool = False):
    """Coefficient of q**p in I(s, q) / C(q)**2 for p = 1..4.

    By default the polynomials are evaluated exactly as typeset in the source
    article.  Those typesettings of orders 1 and 2 do not match the series
    (they are not symmetric under s -> 1-s, while I(s, q) is);
    ``corrected=True`` uses the bracket ``(5+a) s^2 - (5+a) s + a + 2`` for
    both and the prefactor ``a^4 (1-a)(2-a)^3 / 9`` for order 1.  Orders 3
    and 4 are identical in both modes.
    """
    if p not in (1, 2, 3, 4):
        raise DomainError(f"unsupported order p={p}")
    a = alpha
    if not 0 < a < 1:
        raise DomainError("coef_poly needs alpha in (0, 1)")
    s = np.asarray(s, dtype=float)
    if p == 1:
        if not corrected:
            out = (2 - a) ** 2 / 9 * _bracket(a, s, True)
        else:
            out = a ** 4 * (1 - a) * (2 - a) ** 3 / 9 * _bracket(a, s, False)
    elif p == 2:
        out = a ** 4 * (1 - a) * (7 - 4 * a) * (2 - a) ** 3 / 18 * _bracket(a, s, not corrected)
    elif p == 3:
        out = a ** 4 * (2 - a) ** 3 * (1 - a) / 90 * (
            (a ** 3 - 5 * a ** 2 - 17 * a + 69) * s ** 4
            + (10 * a ** 2 - 138 - 2 * a ** 3 + 34 * a) * s ** 3
            + (482 - 346 * a + 15 * a ** 2 + 23 * a ** 3) * s ** 2
            + (-22 * a ** 3 - 20 * a ** 2 - 413 + 329 * a) * s
            + 21 * a ** 3 - 84 * a - 39 * a ** 2 + 156
        )
    else:
        out = a ** 4 * (1 - a) * (2 - a) ** 3 * (9 - 4 * a) / 540 * (
            (3 * a ** 3 - 15 * a ** 2 - 51 * a + 207) * s ** 4
            + (-6 * a ** 3 + 30 * a ** 2 + 102 * a - 414) * s ** 3
            + (29 * a ** 3 - 5 * a ** 2 - 428 * a + 746) * s ** 2
            + (-26 * a ** 3 - 10 * a ** 2 + 377 * a - 539) * s
            + 23 * a ** 3 - 47 * a ** 2 - 92 * a + 188
        )
    return out if out.ndim else float(out)


def coef_series(alpha, s: float, order: int) -> np.ndarray:
    """Taylor coefficients of I(s, q) / C(q)**2 in q, computed by truncated
    power-series products.  Entry ``k`` is the coefficient of ``q**(k-1)``
    (so entry 0 is the q**-1 term, which vanishes)."""
    _check_alpha(alpha)
    N = order + 8
    w = weights(alpha, N + 4)
    wsum = w[1 : N + 1].copy()  # sum_{n>=1} w_n q^(n-1)

    def f_poly(sv):
        A = a_matrix([sv], N + 2)[0]
        c = wsum.copy()
        for k in range(2, N + 2):
            t = w[k] * A[k]
            if k - 2 < N:
                c[k - 2] += 2.0 * t
            if k - 1 < N:
                c[k - 1] -= t
        return c

    def d_poly(sv):
        A = a_matrix([sv], N + 3)[0]
        c = np.zeros(N + 1)  # index = power + 1
        for n in range(2, N + 3):
            for m in range(1, N + 3):
                pw = n + m - 4
                t = w[n] * w[m] * A[n] if n <= N + 3 and m <= N + 3 else 0.0
                if 0 <= pw + 1 < N + 1:
                    c[pw + 1] += t * (2.0 * (n - m) - 2.0)
                if 0 <= pw + 2 < N + 1:
                    c[pw + 2] -= t * (n - m)
        return c

    d_s, d_r = d_poly(s), d_poly(1.0 - s)
    f_s, f_r = f_poly(s), f_poly(1.0 - s)
    total = np.convolve(d_s, np.convolve(f_r, f_r)) + np.convolve(d_r, np.convolve(f_s, f_s))
    return total[: order + 2]


# -- logarithmic-case coefficients -------------------------------------------------------


def _pair_brackets(s, e_vals):
    e_s, e_r = e_vals
    return (1 + e_r) ** 2, (1 + e_s) ** 2


def q0_coeff(p: int, s, e_vals, form: int = 1):
    """Q_0(p, s) given kernel values ``e_vals = (E_0(s,q), E_0(1-s,q))``.

    ``form=1`` sums the defining double series over A_n, ``form=2`` the
    K_n-collected version; the two agree identically.
    """
    if p < 4:
        raise DomainError("q0_coeff needs p >= 4")
    if form not in (1, 2):
        raise DomainError("form must be 1 or 2")
    exact = _is_exact(s) and all(_is_exact(e) for e in e_vals)
    one = Fraction(1) if exact else 1.0
    b_r, b_s = _pair_brackets(s, e_vals)
    r = 1 - s
    total = 0 * one
    if form == 1:
        for n in range(2, p):
            m = p - n
            total += one / n / m * 2 * (n - m - 1) * (a_fn(n, s) * b_r + a_fn(n, r) * b_s)
        for n in range(2, p - 1):
            m = p - 1 - n
            total -= one / n / m * (n - m) * (a_fn(n, s) * b_r + a_fn(n, r) * b_s)
        return total
    for n in range(2, p - 1):
        m = p - 1 - n
        total += one / n / m * (n - m) * (k_fn(0, n, s) * b_r + k_fn(0, n, r) * b_s)
    return total - one * (p - 3) / (p - 2) * (b_r + b_s)


def tail_sum(p: int, s):
    """sum_{n>=2, m>=1, n+m=p-1} (n-m) K_n^0(s) / (n m)."""
    if p < 4:
        raise DomainError("tail_sum needs p >= 4")
    exact = _is_exact(s)
    total = Fraction(0) if exact else 0.0
    for n in range(2, p - 1):
        m = p - 1 - n
        coef = Fraction(n - m, n * m) if exact else (n - m) / (n * m)
        total = total + coef * k_fn(0, n, s)
    return total


def tail_margin(p: int, s):
    """tail_sum(p, s) - (p-3)/(p-2); positive for p >= 11."""
    if _is_exact(s):
        return tail_sum(p, s) - Fraction(p - 3, p - 2)
    return tail_sum(p, s) - (p - 3) / (p - 2)


def s_sum(p: int) -> Fraction:
    """S(p) = sum_{n=2}^{p-2} (1/(p-1-n) - 1/n) / (n+1), exactly."""
    if p < 4:
        raise DomainError("s_sum needs p >= 4")
    return sum(
        ((Fraction(1, p - 1 - n) - Fraction(1, n)) * Fraction(1, n + 1) for n in range(2, p - 1)),
        Fraction(0),
    )


# R(s, q) = sum R_COEFFS[(i, j)] s**i q**j : the p = 4..10 finite part for alpha = 0
R_COEFFS: dict[tuple[int, int], Fraction] = {}


def _r_row(j, pairs):
    for i, c in pairs:
        R_COEFFS[(i, j)] = Fraction(c)


_F = Fraction
_r_row(0, [(0, _F(1, 3)), (1, _F(-2, 3))])
_r_row(1, [(0, 1), (1, _F(-7, 3)), (2, 1)])
_r_row(2, [(0, _F(349, 180)), (1, _F(-239, 45)), (2, _F(43, 10)), (3, _F(-6, 5))])
_r_row(3, [(0, _F(31, 10)), (1, _F(-197, 20)), (2, _F(689, 60)), (3, _F(-94, 15)), (4, _F(4, 3))])
_r_row(4, [(0, _F(249, 56)), (1, _F(-4523, 280)), (2, _F(4093, 168)), (3, _F(-823, 42)),
           (4, _F(173, 21)), (5, _F(-10, 7))])
_r_row(5, [(0, _F(3749, 630)), (1, _F(-15367, 630)), (2, _F(28313, 630)), (3, _F(-29941, 630)),
           (4, _F(3739, 126)), (5, _F(-143, 14)), (6, _F(3, 2))])
_r_row(6, [(0, _F(95663, 12600)), (1, _F(-218681, 6300)), (2, _F(474889, 6300)),
           (3, _F(-620681, 6300)), (4, _F(5125, 63)), (5, _F(-10517, 252)), (6, _F(439, 36)),
           (7, _F(-14, 9))])
R_DEG_S = 7
R_DEG_Q = 6


def r_coeff_table() -> list[list[Fraction]]:
    """Dense table ``T[j][i]``: coefficient of s**i q**j."""
    return [[R_COEFFS.get((i, j), Fraction(0)) for i in range(R_DEG_S + 1)] for j in range(R_DEG_Q + 1)]


def r_poly(s, q):
    """R(s, q) from its coefficient table (exact for Fraction inputs)."""
    table = r_coeff_table()
    if _is_exact(s) and _is_exact(q):
        s, q = Fraction(s), Fraction(q)
        acc = Fraction(0)
        for row in reversed(table):
            inner = Fraction(0)
            for c in reversed(row):
                inner = inner * s + c
            acc = acc * q + inner
        return acc
    s = np.asarray(s, dtype=float)
    q = np.asarray(q, dtype=float)
    acc = np.zeros(np.broadcast(s, q).shape)
    for row in reversed(table):
        inner = np.zeros_like(s)
        for c in reversed(row):
            inner = inner * s + float(c)
        acc = acc * q + inner
    return acc if acc.ndim else float(acc)


def r_double_sum(s, q):
    """R(s, q) straight from its defining double sum over p = 4..10."""
    exact = _is_exact(s) and _is_exact(q)
    one = Fraction(1) if exact else 1.0
    total = 0 * one
    for p in range(4, 11):
        c = 0 * one
        for n in range(2, p):
            m = p - n
            c += one / n / m * 2 * (n - m - 1) * a_fn(n, s)
        for n in range(2, p - 1):
            m = p - 1 - n
            c -= one / n / m * (n - m) * a_fn(n, s)
        total += c * q ** (p - 4)
    return total
