"""Closed-form and semi-numerical SEP of the dual-hop MBM relay.

Hop 1 (UE -> UAV) is M-QAM over the generalized-K channel of the strongest
mirror activation pattern; hop 2 (UAV -> BS) is media-based modulation
received on N_R antennas. The end-to-end SEP of the decode-and-forward relay
is approximated by the weaker hop.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, List, Optional, Tuple

import mpmath
import numpy as np
from scipy import special

from mbm_relay import specfun
from mbm_relay.channel import ChannelParams, RngStream, sample_generalized_k
from mbm_relay.errors import ConfigurationError, ConvergenceError, DomainError
from mbm_relay.logs import log

EULER_GAMMA = 0.5772156649015329

START_DPS = 30
SIGNIFICANT_DIGITS = 15
MAX_DPS = 600

MIN_MGF_SAMPLES = 10_000
DEFAULT_MGF_SAMPLES = 200_000
DEFAULT_QUAD_ORDER = 64
DEFAULT_MGF_SEED = 0x5EED
MGF_STREAM_ID = 2 ** 63
MC_CHUNK = 1_000_000
# below this g m_h / Omega_1 the Bessel sum is mostly cancellation
CDF_CLOSED_FORM_FLOOR = 1e-8
LOG_GRID_STEP = 0.05


def _is_supported_order(m: int) -> bool:
    if m == 2:
        return True
    while m > 1 and m % 4 == 0:
        m //= 4
    return m == 1


@dataclass(frozen=True)
class ModulationConstants:
    """Coefficients of the one-term SEP approximation C * E[Q(sqrt(2 D g))]."""

    C: float
    D: float


def modulation_constants(modulation_order: int) -> ModulationConstants:
    """C = D = 1 for BPSK; C = 4(1 - 1/sqrt(M)), D = 3/(2(M-1)) for QAM."""
    if modulation_order == 2:
        return ModulationConstants(C=1.0, D=1.0)
    if modulation_order < 4 or not _is_supported_order(modulation_order):
        raise ConfigurationError(
            f"modulation order must be 2 or a power of 4: {modulation_order}"
        )
    root = math.sqrt(modulation_order)
    return ModulationConstants(
        C=4.0 * (1.0 - 1.0 / root), D=3.0 / (2.0 * (modulation_order - 1))
    )


def bandwidth_efficiency(modulation_order: int) -> float:
    """log2(M) / 2 bit/s/Hz: one symbol per two time slots."""
    return math.log2(modulation_order) / 2.0


@dataclass(frozen=True)
class SystemConfig:
    """Everything the SEP expressions depend on.

    Attributes:
        modulation_order: M; equals the number of MAPs.
        n_pat: Number of mirror activation patterns of the UAV antenna.
        n_r: Receive antennas at the base station.
        hop1: Channel of the UE -> UAV hop.
        hop2: Channel of the UAV -> BS hop.
        omega1: Average SNR of hop 1, linear.
        omega2: Average SNR of hop 2, linear.
    """

    modulation_order: int
    n_pat: int
    n_r: int
    hop1: ChannelParams
    hop2: ChannelParams
    omega1: float
    omega2: float
    constants: ModulationConstants = field(init=False, repr=False)

    def __post_init__(self) -> None:
        """Enforce M = N_pat and positive counts; derive C and D."""
        if self.n_pat != self.modulation_order:
            raise ConfigurationError(
                f"n_pat ({self.n_pat}) must equal the modulation order "
                f"({self.modulation_order})"
            )
        if int(self.n_r) != self.n_r or self.n_r < 1:
            raise ConfigurationError(
                f"n_r must be an integer >= 1: {self.n_r}"
            )
        for name in ("omega1", "omega2"):
            value = getattr(self, name)
            if not 0 <= value < math.inf:
                raise ConfigurationError(f"{name} must be finite and >= 0")
        object.__setattr__(
            self, "constants", modulation_constants(self.modulation_order)
        )

    @classmethod
    def create(
        cls,
        modulation_order: int,
        m_g: int,
        m_h: int,
        n_r: int,
        omega1: float,
        omega2: Optional[float] = None,
    ) -> "SystemConfig":
        """Config whose hops share severities; omega2 defaults to omega1."""
        params = ChannelParams(m_g=m_g, m_h=m_h)
        return cls(
            modulation_order=modulation_order,
            n_pat=modulation_order,
            n_r=n_r,
            hop1=params,
            hop2=params,
            omega1=omega1,
            omega2=omega1 if omega2 is None else omega2,
        )

    @property
    def bandwidth_efficiency(self) -> float:
        """log2(M) / 2 bit/s/Hz."""
        return bandwidth_efficiency(self.modulation_order)


@dataclass(frozen=True)
class GainReport:
    """High-SNR array and diversity gains of both hops."""

    array_gain_hop1: float
    diversity_hop1: int
    array_gain_hop2: float
    diversity_hop2: int
    overall_diversity: int
    upsilon: float
    zeta: float


@lru_cache(maxsize=256)
def _multinomial_exact(r: int, m_g: int) -> Tuple[Fraction, ...]:
    """Coefficients of (sum_{n < m_g} m_g^n u^n / n!)^r, exactly."""
    a = [Fraction(m_g ** n, math.factorial(n)) for n in range(m_g)]
    chi = [a[0] ** r]
    for p in range(1, r * (m_g - 1) + 1):
        acc = sum(
            (n * r - p + n) * a[n] * chi[p - n]
            for n in range(1, min(p, m_g - 1) + 1)
        )
        chi.append(Fraction(acc) / (p * a[0]))
    return tuple(chi)


def multinomial_coeffs(r: int, m_g: int) -> List[float]:
    """Multinomial coefficients chi_p^r, p = 0 .. r(m_g - 1).

    Built with the J.C.P. Miller power recurrence
    chi_p = 1/(p a_0) sum_{n=1}^{p} (n r - p + n) a_n chi_{p-n},
    a_n = m_g^n / n! (zero for n >= m_g), in exact rational arithmetic.
    """
    if int(r) != r or r < 0:
        raise DomainError(f"r must be a non-negative integer: {r}")
    if int(m_g) != m_g or m_g < 1:
        raise DomainError(f"m_g must be a positive integer: {m_g}")
    return [float(c) for c in _multinomial_exact(int(r), int(m_g))]


def _mp_fraction(value: Fraction) -> Any:
    return mpmath.mpf(value.numerator) / value.denominator


def _require_unit_power(params: ChannelParams) -> None:
    if params.mean_shadow_power != 1.0 or params.mean_fade_power != 1.0:
        raise ConfigurationError(
            "the closed forms assume unit shadowing and fading power"
        )


def _with_precision_guard(
    evaluate: Callable[[], Tuple[Any, Any]], label: str
) -> float:
    """Run ``evaluate`` at rising mpmath precision until cancellation fits.

    ``evaluate`` returns (value, peak), where peak is the largest magnitude
    that entered the alternating sum. The digits lost to cancellation are
    log10(peak / |value|); the precision is raised until at least
    SIGNIFICANT_DIGITS survive.

    Raises:
        ConvergenceError: If more than MAX_DPS digits would be needed.
    """
    dps = START_DPS
    while True:
        with mpmath.workdps(dps):
            value, peak = evaluate()
            if value == 0:
                lost = float(dps)
            else:
                lost = float(mpmath.log10(peak / abs(value)))
            result = float(value)
        if lost + SIGNIFICANT_DIGITS <= dps:
            return result
        wanted = max(int(math.ceil(lost)) + SIGNIFICANT_DIGITS + 10, dps + 10)
        if wanted > MAX_DPS:
            raise ConvergenceError(
                f"{label} needs more than {MAX_DPS} digits "
                f"({lost:.0f} lost to cancellation)"
            )
        log(
            msg="Raising working precision",
            data={"expression": label, "from": dps, "to": wanted},
        )
        dps = wanted


def _hop1_lead(params: ChannelParams, n_pat: int) -> Any:
    """N_pat m_g^m_g / Gamma(m_g) at the current precision."""
    m_g = params.m_g
    return n_pat * mpmath.power(m_g, m_g) / mpmath.factorial(m_g - 1)


def _hop1_cdf_mp(
    gamma: float, params: ChannelParams, n_pat: int, omega1: float
) -> Tuple[Any, Any]:
    m_g, m_h = params.m_g, params.m_h
    x = mpmath.mpf(gamma) * m_h / mpmath.mpf(omega1)
    terms = []
    for r in range(n_pat):
        weight = math.comb(n_pat - 1, r) * (-1) ** r
        b = m_g * (r + 1)
        arg = 2 * mpmath.sqrt(x * b)
        ratio = x / b
        for p, chi in enumerate(_multinomial_exact(r, m_g)):
            coef = weight * _mp_fraction(chi)
            for s in range(m_h):
                nu = m_g + p - s
                terms.append(
                    coef
                    * mpmath.power(x, s)
                    / mpmath.factorial(s)
                    * 2
                    * mpmath.power(ratio, mpmath.mpf(nu) / 2)
                    * specfun.bessel_k_mp(nu, arg)
                )
    lead = _hop1_lead(params, n_pat)
    tail = lead * mpmath.fsum(terms)
    peak = max(mpmath.mpf(1), lead * max(abs(t) for t in terms))
    return 1 - tail, peak


def hop1_cdf(
    gamma: float, params: ChannelParams, n_pat: int, omega1: float
) -> float:
    """CDF of the hop-1 SNR after MAP selection.

    F(g) = 1 - (N_pat m_g^m_g / Gamma(m_g)) sum_{r,p,s} C(N_pat-1, r) (-1)^r
           chi_p^r (x^s / s!) 2 (x / (m_g(r+1)))^(nu/2)
           K_nu(2 sqrt(x m_g (r+1))),
    with x = g m_h / Omega_1 and nu = m_g + p - s. Below
    CDF_CLOSED_FORM_FLOOR in x the sum is replaced by ``hop1_cdf_batch``.
    """
    _require_unit_power(params)
    if int(n_pat) != n_pat or n_pat < 1:
        raise DomainError(f"n_pat must be a positive integer: {n_pat}")
    if not omega1 > 0:
        raise DomainError(f"omega1 must be positive: {omega1}")
    if not gamma >= 0:
        raise DomainError(f"gamma must be non-negative: {gamma}")
    if gamma == 0:
        return 0.0
    if gamma * params.m_h / omega1 < CDF_CLOSED_FORM_FLOOR:
        return float(
            hop1_cdf_batch(np.array([gamma]), params, n_pat, omega1)[0]
        )
    value = _with_precision_guard(
        lambda: _hop1_cdf_mp(gamma, params, int(n_pat), omega1), "hop1_cdf"
    )
    return min(1.0, max(0.0, value))


def _hop1_moment_table(m_g: int, m_h: int, count: int, arg: Any) -> List[Any]:
    """J[s][p] = I(m_g + p + 1/2, -s - 1/2; arg) for s < m_h, p < count.

    The column s = m_h - 1 comes from the moment recurrence; the others
    follow from J(p, s) = J(p, s + 1) + J(p + 1, s + 1), a sum of positive
    terms.
    """
    half = mpmath.mpf(1) / 2
    column = specfun.laplace_moments_mp(
        m_g + half, half - m_h, arg, count + m_h - 1
    )
    table = [column]
    for _ in range(m_h - 1):
        column = [column[p] + column[p + 1] for p in range(len(column) - 1)]
        table.append(column)
    table.reverse()
    return table


def _hop1_sep_mp(config: SystemConfig) -> Tuple[Any, Any]:
    params = config.hop1
    m_g, m_h = params.m_g, params.m_h
    big_c = mpmath.mpf(config.constants.C)
    big_d = mpmath.mpf(config.constants.D)
    omega = mpmath.mpf(config.omega1)
    half = mpmath.mpf(1) / 2
    base = m_h / (big_d * omega)
    # Gamma(s + 1/2) / s!
    s_weights = [
        mpmath.gamma(s + half) / mpmath.factorial(s) for s in range(m_h)
    ]
    terms = []
    for r in range(config.n_pat):
        weight = math.comb(config.n_pat - 1, r) * (-1) ** r
        chis = _multinomial_exact(r, m_g)
        table = _hop1_moment_table(m_g, m_h, len(chis), base * m_g * (r + 1))
        power = mpmath.power(base, m_g)
        for p, chi in enumerate(chis):
            coef = weight * _mp_fraction(chi) * power
            for s in range(m_h):
                terms.append(coef * s_weights[s] * table[s][p])
            power *= base
    factor = (
        big_c
        / (2 * mpmath.sqrt(mpmath.pi))
        * _hop1_lead(params, config.n_pat)
    )
    value = big_c / 2 - factor * mpmath.fsum(terms)
    peak = max(big_c / 2, factor * max(abs(t) for t in terms))
    return value, peak


def hop1_sep_closed(config: SystemConfig) -> float:
    """Hop-1 SEP for integer severities as a finite Gamma-Whittaker sum.

    P = C/2 - (C / (2 sqrt(pi))) (N_pat m_g^m_g / Gamma(m_g))
        sum_{r,p,s} C(N_pat-1, r) (-1)^r chi_p^r (m_h / (D Omega_1))^(m_g+p)
        (Gamma(s+1/2) / s!) J_r(p, s),
    J_r(p, s) = Gamma(m_g+p+1/2) e^(X/2) X^(-(nu+1)/2) W_{kappa, nu/2}(X)
    with X = m_g m_h (r+1) / (D Omega_1), nu = m_g + p - s and
    kappa = -(m_g + p + s)/2. J_r is the Laplace moment
    int_0^inf e^(-X t) t^(m_g+p-1/2) (1+t)^(-s-1/2) dt, built for all
    (p, s) from one column by ``specfun.laplace_moments_mp``.

    The alternating sum is evaluated under a precision guard, so the result
    keeps 15 significant digits however deep the SEP is.
    """
    _require_unit_power(config.hop1)
    if not config.omega1 > 0:
        raise DomainError(f"omega1 must be positive: {config.omega1}")
    value = _with_precision_guard(
        lambda: _hop1_sep_mp(config), "hop1_sep_closed"
    )
    return min(1.0, max(0.0, value))


def hop1_cdf_batch(
    gammas: np.ndarray, params: ChannelParams, n_pat: int, omega1: float
) -> np.ndarray:
    """Hop-1 SNR CDF at many thresholds, in double precision.

    F(g) = E_y[P(m_g, m_g g / (Omega_1 y))^N_pat] with y ~ Gamma(m_h, 1/m_h)
    and P the regularized lower incomplete gamma. The mean over y is taken
    with the trapezoid rule on a uniform grid in log y; the integrand is
    positive, so small values keep their relative precision.
    """
    _require_unit_power(params)
    if int(n_pat) != n_pat or n_pat < 1:
        raise DomainError(f"n_pat must be a positive integer: {n_pat}")
    if not omega1 > 0:
        raise DomainError(f"omega1 must be positive: {omega1}")
    gammas = np.asarray(gammas, dtype=float)
    if not np.all(gammas >= 0):
        raise DomainError("gamma must be non-negative")
    m_g, m_h = params.m_g, params.m_h
    result = np.zeros_like(gammas)
    positive = gammas > 0
    if not np.any(positive):
        return result
    log_c = np.log(m_g * gammas[positive] / omega1)
    lower = min(float(np.min(log_c)), 0.0) - 40.0 / m_h - 2.0
    upper = math.log1p(60.0 / m_h) + 1.0
    count = int(math.ceil((upper - lower) / LOG_GRID_STEP)) + 1
    u, step = np.linspace(lower, upper, count, retstep=True)
    log_weight = (
        m_h * math.log(m_h)
        + m_h * u
        - m_h * np.exp(u)
        - float(special.gammaln(m_h))
    )
    weights = np.exp(log_weight) * step
    weights[0] *= 0.5
    weights[-1] *= 0.5
    with np.errstate(over="ignore", under="ignore"):
        shadow = special.gammainc(m_g, np.exp(log_c[:, None] - u[None, :]))
        values = np.sum(shadow ** int(n_pat) * weights, axis=1)
    result[positive] = np.minimum(values, 1.0)
    return result


def hop1_sep_quadrature(config: SystemConfig, rtol: float = 1e-9) -> float:
    """Hop-1 SEP by direct quadrature of the CDF-based SEP integral.

    With t = sqrt(g) the integrable singularity at g = 0 disappears and
    C/2 - (C sqrt(D)/(2 sqrt(pi))) int e^(-D g) g^(-1/2) (1 - F(g)) dg
    becomes (C sqrt(D)/sqrt(pi)) int_0^inf e^(-D t^2) F(t^2) dt, which has
    no cancellation. F comes from ``hop1_cdf_batch``, one call per panel.
    """
    _require_unit_power(config.hop1)
    if not config.omega1 > 0:
        raise DomainError(f"omega1 must be positive: {config.omega1}")
    big_c, big_d = config.constants.C, config.constants.D
    params, n_pat, omega = config.hop1, config.n_pat, config.omega1

    def integrand(t: np.ndarray) -> np.ndarray:
        squared = np.square(t)
        return np.exp(-big_d * squared) * hop1_cdf_batch(
            squared, params, n_pat, omega
        )

    diversity = min(n_pat * params.m_g, params.m_h)
    width = math.sqrt(max(diversity, 1) / big_d)
    integral = specfun.integrate_semi_infinite(
        integrand, 0.0, width, rtol=rtol, tail_rtol=1e-12
    )
    return big_c * math.sqrt(big_d) / math.sqrt(math.pi) * integral


def upsilon(params: ChannelParams, n_pat: int) -> float:
    """Coefficient of the hop-1 asymptotic CDF F(Omega_1) ~ Upsilon Omega_1^-G.

    Three cases by the sign of N_pat m_g - m_h; products are accumulated in
    log space. The boundary case carries log(psi / (m_g m_h)) with psi the
    Euler constant and is negative whenever m_g m_h > psi.
    """
    m_g, m_h = params.m_g, params.m_h
    order = n_pat * m_g
    log_gamma_g = n_pat * float(special.gammaln(m_g))
    log_mgmh = math.log(m_g * m_h)
    if order > m_h:
        log_value = (
            math.log(n_pat)
            + float(special.gammaln(order - m_h))
            + m_h * log_mgmh
            - (n_pat - 1) * math.log(m_g)
            - log_gamma_g
            - float(special.gammaln(m_h + 1))
        )
        return math.exp(log_value)
    if order == m_h:
        log_value = (
            math.log(n_pat)
            + 0.5 * (order + m_h) * log_mgmh
            - (n_pat - 1) * math.log(m_g)
            - log_gamma_g
            - float(special.gammaln(m_h))
        )
        return math.exp(log_value) * math.log(EULER_GAMMA / (m_g * m_h))
    log_value = (
        float(special.gammaln(m_h - order))
        + order * log_mgmh
        - n_pat * math.log(m_g)
        - log_gamma_g
        - float(special.gammaln(m_h))
    )
    return math.exp(log_value)


def hop1_diversity(params: ChannelParams, n_pat: int) -> int:
    """min(N_pat m_g, m_h)."""
    return min(n_pat * params.m_g, params.m_h)


def hop1_cdf_asymptotic(
    params: ChannelParams, n_pat: int, omega1: float
) -> float:
    """Upsilon * Omega_1^(-G_d1)."""
    return upsilon(params, n_pat) * omega1 ** (-hop1_diversity(params, n_pat))


def hop1_sep_asymptotic(config: SystemConfig) -> float:
    """High-SNR hop-1 SEP.

    C Upsilon Gamma(G + 1/2) / (2 sqrt(pi) (D Omega_1)^G).
    """
    big_c, big_d = config.constants.C, config.constants.D
    g_d = hop1_diversity(config.hop1, config.n_pat)
    return (
        big_c
        * upsilon(config.hop1, config.n_pat)
        * math.gamma(g_d + 0.5)
        / (2.0 * math.sqrt(math.pi) * (big_d * config.omega1) ** g_d)
    )


def _pair_difference_power(
    params: ChannelParams, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Phi = |g1 h1 - g2 h2|^2 for independent double-Nakagami pairs."""
    first = sample_generalized_k(params, rng, size)
    second = sample_generalized_k(params, rng, size)
    return np.abs(first - second) ** 2  # type: ignore


def _conditional_mgf(
    s: float, first: np.ndarray, second: np.ndarray, m_h: int
) -> np.ndarray:
    """E[exp(-s Phi) | g1, g2] with both fades averaged out exactly.

    For shadow powers g1, g2, rho = m_h / (m_h + s g2),
    tau = m_h / (m_h + s rho g1) and y = s (1 - rho) g1 tau / m_h the mean is
    (rho tau)^m_h sum_k C(m_h-1, k) C(m_h+k-1, k) y^k, k < m_h.
    """
    rho = m_h / (m_h + s * second)
    tau = m_h / (m_h + s * rho * first)
    # 1 - rho = s g2 rho / m_h, kept without subtraction
    y = (s * second * rho / m_h) * s * first * tau / m_h
    coeffs = [
        math.comb(m_h - 1, k) * math.comb(m_h + k - 1, k) for k in range(m_h)
    ]
    return (rho * tau) ** m_h * np.polynomial.polynomial.polyval(y, coeffs)


def mgf_phi(
    s_values: np.ndarray,
    params: ChannelParams,
    samples: int = DEFAULT_MGF_SAMPLES,
    seed: int = DEFAULT_MGF_SEED,
) -> np.ndarray:
    """Monte-Carlo estimate of M_Phi(s) = E[exp(-s Phi)] on a grid of s.

    Only the two shadow powers are sampled; the fading and the relative
    phase are averaged in closed form by ``_conditional_mgf``. The estimate
    is exactly 1 at s = 0 and keeps the 1/s decay of the true MGF, so the
    Craig integral has no Monte-Carlo floor at high SNR. Every s shares the
    same fixed-seed sample, so the estimate is deterministic and
    nonincreasing in s.
    """
    if samples < MIN_MGF_SAMPLES:
        raise ConfigurationError(
            f"mgf_samples must be >= {MIN_MGF_SAMPLES}: {samples}"
        )
    rng = RngStream(seed, MGF_STREAM_ID).generator()
    scale = params.mean_shadow_power * params.mean_fade_power / params.m_g
    s_values = np.ravel(s_values)
    totals = np.zeros(len(s_values))
    remaining = int(samples)
    while remaining:
        size = min(remaining, MC_CHUNK)
        first = rng.gamma(params.m_g, scale, size)
        second = rng.gamma(params.m_g, scale, size)
        for index, s in enumerate(s_values):
            totals[index] += np.sum(
                _conditional_mgf(float(s), first, second, params.m_h)
            )
        remaining -= size
    return totals / int(samples)


def _union_prefactor(n_pat: int) -> float:
    return n_pat * math.log2(n_pat) / 2.0


def hop2_sep_bound(
    config: SystemConfig,
    mgf_samples: int = DEFAULT_MGF_SAMPLES,
    quad_order: int = DEFAULT_QUAD_ORDER,
    seed: int = DEFAULT_MGF_SEED,
) -> float:
    """Union bound on the hop-2 SEP through Craig's formula.

    (N_pat log2 N_pat / (2 pi)) int_0^{pi/2} M_Phi(Omega_2 / (4 sin^2 phi))^N_R
    dphi, with the MGF estimated from a fixed-seed sample and the phi
    integral by Gauss-Legendre.
    """
    if config.n_pat < 2:
        raise DomainError(f"hop-2 bound needs n_pat >= 2: {config.n_pat}")
    rule = specfun.gauss_legendre(quad_order)
    phi = 0.25 * math.pi * (1.0 + rule.nodes)
    weights = 0.25 * math.pi * rule.weights
    s_values = config.omega2 / (4.0 * np.sin(phi) ** 2)
    mgf = mgf_phi(s_values, config.hop2, samples=mgf_samples, seed=seed)
    integral = float(np.dot(weights, mgf ** config.n_r))
    return _union_prefactor(config.n_pat) * integral / math.pi


def hop2_union_bound_mc(
    config: SystemConfig, samples: int, seed: int = DEFAULT_MGF_SEED
) -> float:
    """Union bound (N_pat log2 N_pat / 2) E[Q(sqrt(Omega_2 Phi_sum / 2))].

    Phi_sum adds N_R independent copies of Phi, one per receive antenna.
    Estimated directly by Monte Carlo, chunk by chunk.
    """
    if config.n_pat < 2:
        raise DomainError(f"hop-2 bound needs n_pat >= 2: {config.n_pat}")
    if samples < MIN_MGF_SAMPLES:
        raise ConfigurationError(f"samples must be >= {MIN_MGF_SAMPLES}")
    rng = RngStream(seed, MGF_STREAM_ID + 1).generator()
    total = 0.0
    remaining = int(samples)
    while remaining:
        size = min(remaining, MC_CHUNK)
        phi_sum = sum(
            _pair_difference_power(config.hop2, rng, size)
            for _ in range(config.n_r)
        )
        total += float(
            np.sum(specfun.gaussian_q(np.sqrt(config.omega2 * phi_sum / 2.0)))
        )
        remaining -= size
    return _union_prefactor(config.n_pat) * total / samples


def _log_hop2_coefficient(n_pat: int, n_r: int) -> float:
    """log of N_pat log2(N_pat) 2^(N_R-2) (2 N_R)! / (N_R!)^2."""
    return (
        math.log(n_pat * math.log2(n_pat))
        + (n_r - 2) * math.log(2.0)
        + float(special.gammaln(2 * n_r + 1))
        - 2.0 * float(special.gammaln(n_r + 1))
    )


def hop2_sep_asymptotic(config: SystemConfig) -> float:
    """High-SNR hop-2 bound coeff * (Omega_2 / zeta)^(-N_R)."""
    if config.n_pat < 2:
        raise DomainError(f"hop-2 bound needs n_pat >= 2: {config.n_pat}")
    if not config.omega2 > 0:
        raise DomainError(f"omega2 must be positive: {config.omega2}")
    zeta = specfun.meijer_g_zeta(config.hop2.m_g, config.hop2.m_h)
    log_coeff = _log_hop2_coefficient(config.n_pat, config.n_r)
    log_value = log_coeff - config.n_r * (
        math.log(config.omega2) - math.log(zeta)
    )
    return math.exp(log_value)


def gains(config: SystemConfig) -> GainReport:
    """Array and diversity gains of both hops and the overall diversity."""
    big_c, big_d = config.constants.C, config.constants.D
    ups = upsilon(config.hop1, config.n_pat)
    g_d1 = hop1_diversity(config.hop1, config.n_pat)
    g_a1 = (
        big_c
        * ups
        * math.gamma(g_d1 + 0.5)
        / (2.0 * big_d * math.sqrt(math.pi))
    ) ** g_d1
    zeta = specfun.meijer_g_zeta(config.hop2.m_g, config.hop2.m_h)
    g_a2 = math.exp(
        _log_hop2_coefficient(config.n_pat, config.n_r)
        + config.n_r * math.log(zeta)
    )
    return GainReport(
        array_gain_hop1=g_a1,
        diversity_hop1=g_d1,
        array_gain_hop2=g_a2,
        diversity_hop2=config.n_r,
        overall_diversity=min(g_d1, config.n_r),
        upsilon=ups,
        zeta=zeta,
    )


def e2e_sep(hop1_sep: float, hop2_sep: float) -> float:
    """End-to-end SEP of the decode-and-forward relay: the weaker hop."""
    for value in (hop1_sep, hop2_sep):
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"SEP must lie in [0, 1]: {value}")
    return max(hop1_sep, hop2_sep)
