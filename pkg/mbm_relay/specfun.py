"""Special functions used by the SEP analysis.

Two tiers are provided. The float tier (numpy/scipy) backs the public
functions ``gaussian_q``, ``bessel_k``, ``whittaker_w``, ``meijer_g_zeta`` and
the Gauss-Legendre machinery. The ``*_mp`` tier (mpmath) is used by the
alternating closed forms in :mod:`mbm_relay.analysis`, which lose most of
their significant digits to cancellation at high SNR.
"""
import math
from dataclasses import dataclass
from typing import Any, Callable, List, Tuple, Union

import mpmath
import numpy as np
from scipy import special

from mbm_relay.errors import ConvergenceError, DomainError

FloatOrArray = Union[float, np.ndarray]
Integrand = Callable[[np.ndarray], np.ndarray]

# relative size below which a panel of a semi-infinite integral is a tail
TAIL_RTOL = 1e-16
MAX_PANELS = 20000
# guard digits for the moment recurrences, on top of the caller precision
RECURRENCE_GUARD_DPS = 10


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on [-1, 1].

    Attributes:
        nodes: Abscissae, strictly increasing and symmetric about 0.
        weights: Positive weights summing to 2.
        order: Number of nodes.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, func: Integrand, lower: float, upper: float) -> float:
        """Integrate ``func`` over [lower, upper] with the mapped rule."""
        half = 0.5 * (upper - lower)
        mid = 0.5 * (upper + lower)
        values = func(mid + half * self.nodes)
        return float(half * np.dot(self.weights, values))


def gauss_legendre(order: int) -> QuadratureRule:
    """Build the ``order``-point Gauss-Legendre rule.

    The rule is exact for polynomials up to degree ``2 * order - 1``.

    Raises:
        DomainError: If order is below 2.
    """
    if int(order) != order or order < 2:
        raise DomainError(f"quadrature order must be an integer >= 2: {order}")
    nodes, weights = np.polynomial.legendre.leggauss(int(order))
    # leggauss is symmetric to rounding; enforce it exactly
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return QuadratureRule(nodes=nodes, weights=weights, order=int(order))


def adaptive_gauss_legendre(
    func: Integrand,
    lower: float,
    upper: float,
    rtol: float = 1e-10,
    atol: float = 0.0,
    order: int = 16,
    max_panels: int = MAX_PANELS,
) -> float:
    """Integrate ``func`` over a finite interval by panel bisection.

    A panel is accepted when its estimate and the sum of its two halves agree
    to ``max(atol, rtol * |estimate|)``, where the relative part is measured
    against the whole-interval estimate scaled to the panel width.

    Raises:
        ConvergenceError: If more than ``max_panels`` bisections are needed.
    """
    if upper == lower:
        return 0.0
    rule = gauss_legendre(order)
    whole = rule.integrate(func, lower, upper)
    width = upper - lower
    stack: List[Tuple[float, float, float]] = [(lower, upper, whole)]
    accepted: List[float] = []
    bisections = 0
    while stack:
        lo, hi, estimate = stack.pop()
        mid = 0.5 * (lo + hi)
        left = rule.integrate(func, lo, mid)
        right = rule.integrate(func, mid, hi)
        refined = left + right
        scale = max(abs(refined), abs(whole) * (hi - lo) / width)
        if abs(refined - estimate) <= max(atol, rtol * scale) or mid in (
            lo,
            hi,
        ):
            accepted.append(refined)
            continue
        bisections += 1
        if bisections > max_panels:
            raise ConvergenceError(
                f"adaptive quadrature on [{lower}, {upper}] exceeded "
                f"{max_panels} panels"
            )
        stack.append((lo, mid, left))
        stack.append((mid, hi, right))
    return math.fsum(accepted)


def integrate_semi_infinite(
    func: Integrand,
    start: float,
    width: float,
    rtol: float = 1e-10,
    tail_rtol: float = TAIL_RTOL,
    order: int = 16,
) -> float:
    """Integrate a decaying ``func`` over [start, inf).

    Panels of doubling width are added until two consecutive panels each
    contribute less than ``tail_rtol`` of the running total.

    Raises:
        ConvergenceError: If the integrand does not decay within 200 panels.
    """
    parts: List[float] = []
    lo = start
    quiet = 0
    for _ in range(200):
        hi = lo + width
        part = adaptive_gauss_legendre(func, lo, hi, rtol=rtol, order=order)
        parts.append(part)
        total = math.fsum(parts)
        if abs(part) <= tail_rtol * abs(total):
            quiet += 1
            if quiet == 2:
                return total
        else:
            quiet = 0
        lo = hi
        width *= 2.0
    raise ConvergenceError(
        f"integrand did not decay on [{start}, inf) after 200 panels"
    )


def gaussian_q(x: FloatOrArray) -> FloatOrArray:
    """Gaussian tail probability Q(x) = P(N(0, 1) > x).

    Evaluated as ``erfc(x / sqrt(2)) / 2``; scipy's erfc keeps full relative
    precision deep into the upper tail.
    """
    value = 0.5 * special.erfc(np.divide(x, math.sqrt(2.0)))
    if np.ndim(value) == 0:
        return float(value)
    return value  # type: ignore


def bessel_k(order: float, x: float) -> float:
    """Modified Bessel function of the second kind K_order(x).

    Raises:
        DomainError: If x <= 0.
    """
    if not x > 0:
        raise DomainError(f"bessel_k requires x > 0, got {x}")
    return float(special.kv(order, x))


def bessel_k_mp(order: float, x: "mpmath.mpf") -> "mpmath.mpf":
    """Extended-precision K_order(x) at the current mpmath precision."""
    if not x > 0:
        raise DomainError(f"bessel_k requires x > 0, got {x}")
    return mpmath.besselk(order, x)


def _gamma_weighted_mean(
    shape: float, transform: Callable[[np.ndarray], np.ndarray]
) -> float:
    """E[exp(transform(u))] for u ~ Gamma(shape, 1), evaluated in log space."""
    log_norm = float(special.gammaln(shape))
    if shape >= 1.0:

        def integrand(u: np.ndarray) -> np.ndarray:
            with np.errstate(divide="ignore"):
                logs = (shape - 1.0) * np.log(u) - u - log_norm
            return np.exp(logs + transform(u))  # type: ignore

        return integrate_semi_infinite(
            integrand, 0.0, width=shape + 4.0 * math.sqrt(shape) + 1.0
        )

    # u = w ** (1 / shape) absorbs the u ** (shape - 1) singularity at 0
    def integrand_w(w: np.ndarray) -> np.ndarray:
        u = np.power(w, 1.0 / shape)
        log_f = -u - log_norm - math.log(shape) + transform(u)
        return np.exp(log_f)  # type: ignore

    return integrate_semi_infinite(integrand_w, 0.0, width=1.0)


def tricomi_u(a: float, b: float, z: float) -> float:
    """Tricomi confluent hypergeometric function U(a, b, z).

    Uses the Laplace-type representation, rescaled by ``t = u / z``::

        U(a, b, z) = z ** -a * E[(1 + u / z) ** (b - a - 1)],  u ~ Gamma(a)

    Raises:
        DomainError: If a <= 0 or z <= 0.
    """
    if not z > 0:
        raise DomainError(f"tricomi_u requires z > 0, got {z}")
    if not a > 0:
        raise DomainError(f"tricomi_u requires a > 0, got {a}")
    power = b - a - 1.0
    mean = _gamma_weighted_mean(a, lambda u: power * np.log1p(u / z))
    return math.exp(-a * math.log(z)) * mean


def whittaker_w(kappa: float, mu: float, z: float) -> float:
    """Whittaker function W_{kappa, mu}(z) for z > 0.

    W = exp(-z/2) z^(mu + 1/2) U(mu - kappa + 1/2, 1 + 2 mu, z). With the
    rescaled U representation the powers of z collapse to z^kappa, so the
    value is assembled in log space.

    Raises:
        DomainError: If z <= 0 or mu - kappa + 1/2 <= 0.
        ConvergenceError: If the U quadrature does not meet tolerance.
    """
    if not z > 0:
        raise DomainError(f"whittaker_w requires z > 0, got {z}")
    a = mu - kappa + 0.5
    if not a > 0:
        raise DomainError(
            f"whittaker_w needs mu - kappa + 1/2 > 0, got {a} "
            f"(kappa={kappa}, mu={mu})"
        )
    power = 2.0 * mu - a
    mean = _gamma_weighted_mean(a, lambda u: power * np.log1p(u / z))
    if not mean > 0 or not math.isfinite(mean):
        raise ConvergenceError(
            f"whittaker_w({kappa}, {mu}, {z}) quadrature returned {mean}"
        )
    return math.exp(-0.5 * z + kappa * math.log(z) + math.log(mean))


def laplace_moments_mp(
    alpha: "mpmath.mpf", beta: "mpmath.mpf", z: "mpmath.mpf", count: int
) -> List["mpmath.mpf"]:
    """I(alpha + k) for k = 0 .. count - 1, at extended precision.

    I(a) = int_0^inf exp(-z t) t^(a-1) (1+t)^beta dt
         = Gamma(a) U(a, a+beta+1, z)

    Integration by parts gives the three-term recurrence
    z I(a+2) = a I(a) + (a + beta + 1 - z) I(a+1). Every coefficient is
    positive upwards from a >= z - beta - 1 and, solved for I(a), downwards
    below it; the two seeds next to that pivot come from ``mpmath.hyperu``
    and the rest is filled in without subtraction.

    Raises:
        DomainError: If alpha <= 0, z <= 0 or count < 1.
    """
    if not alpha > 0:
        raise DomainError(f"laplace moments need alpha > 0, got {alpha}")
    if not z > 0:
        raise DomainError(f"laplace moments need z > 0, got {z}")
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    with mpmath.extradps(RECURRENCE_GUARD_DPS):
        alpha, beta, z = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(z)
        pivot = int(mpmath.ceil(z - beta - 1 - alpha))
        pivot = min(max(pivot, 0), count - 1)
        values: List[Any] = [None] * (count + 1)
        for k in (pivot, pivot + 1):
            a = alpha + k
            values[k] = mpmath.gamma(a) * mpmath.hyperu(a, a + beta + 1, z)
        for k in range(pivot, count - 1):
            a = alpha + k
            values[k + 2] = (
                a * values[k] + (a + beta + 1 - z) * values[k + 1]
            ) / z
        for k in range(pivot - 1, -1, -1):
            a = alpha + k
            values[k] = (
                z * values[k + 2] - (a + beta + 1 - z) * values[k + 1]
            ) / a
    return [+value for value in values[:count]]


def _check_severity(name: str, value: int) -> None:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise DomainError(f"{name} must be a positive integer, got {value}")


def meijer_g_zeta(m_g: int, m_h: int) -> float:
    """Second-hop coding-gain constant zeta.

    zeta = m_g m_h / (Gamma(m_g)^2 Gamma(m_h)^2)
           * G^{2,2}_{2,2}(1 | 1-m_h, 1-m_g; m_h-1, m_g-1)

    The Meijer-G value is the Mellin-Barnes integral along Re s = 1/2, where
    the four Gamma factors pair into squared moduli::

        G = (1/pi) int_0^inf |Gamma(m_h - 1/2 + it)|^2
                             |Gamma(m_g - 1/2 + it)|^2 dt

    The integrand is truncated once it falls below 1e-16 of its peak (t = 0).

    Raises:
        DomainError: For non-positive or non-integer severities.
    """
    _check_severity("m_g", m_g)
    _check_severity("m_h", m_h)
    x_h = float(m_h) - 0.5
    x_g = float(m_g) - 0.5

    def log_integrand(t: np.ndarray) -> np.ndarray:
        return 2.0 * (  # type: ignore
            special.loggamma(x_h + 1j * t).real
            + special.loggamma(x_g + 1j * t).real
        )

    log_peak = float(log_integrand(np.zeros(1))[0])
    mass = integrate_semi_infinite(
        lambda t: np.exp(log_integrand(t) - log_peak),
        0.0,
        width=1.0,
        rtol=1e-12,
    )
    log_prefactor = math.log(float(m_g) * float(m_h)) - 2.0 * float(
        special.gammaln(m_g) + special.gammaln(m_h)
    )
    return math.exp(log_prefactor + log_peak) * mass / math.pi
