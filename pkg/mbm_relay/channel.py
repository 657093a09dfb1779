"""Double-Nakagami (generalized-K) channel sampling and moment matching."""
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from mbm_relay.errors import ConfigurationError, DomainError

Size = Optional[Union[int, Tuple[int, ...]]]

UINT64_LIMIT = 2 ** 64


@dataclass(frozen=True)
class ChannelParams:
    """Severities and normalizations of one hop.

    Attributes:
        m_g: Shadowing severity (integer >= 1).
        m_h: Fading severity (integer >= 1).
        mean_shadow_power: E[|g|^2], fixed to 1 by the analysis.
        mean_fade_power: E[|h|^2], fixed to 1 by the analysis.
    """

    m_g: int
    m_h: int
    mean_shadow_power: float = 1.0
    mean_fade_power: float = 1.0

    def __post_init__(self) -> None:
        """Reject non-integer severities and non-positive powers."""
        for name in ("m_g", "m_h"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ConfigurationError(
                    f"{name} must be an integer >= 1, got {value}"
                )
            object.__setattr__(self, name, int(value))
        for name in ("mean_shadow_power", "mean_fade_power"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")


@dataclass(frozen=True)
class RngStream:
    """Identity of a reproducible random stream.

    Equal ``(seed, stream_id)`` pairs always yield the same sequence. The
    stream id is mixed in as a SeedSequence spawn key, and the bit generator
    is Philox, a counter-based generator, so distinct ids give independent
    streams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        """Keep both fields in the unsigned 64-bit range."""
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if int(value) != value or not 0 <= value < UINT64_LIMIT:
                raise ConfigurationError(
                    f"{name} must be an unsigned 64-bit integer, got {value}"
                )

    def generator(self) -> np.random.Generator:
        """Return a fresh generator positioned at the start of the stream."""
        sequence = np.random.SeedSequence(
            int(self.seed), spawn_key=(int(self.stream_id),)
        )
        return np.random.Generator(np.random.Philox(sequence))


def sample_nakagami(
    m: float,
    mean_power: float,
    rng: np.random.Generator,
    size: Size = None,
) -> Union[float, np.ndarray]:
    """Draw Nakagami-m amplitudes with E[amplitude^2] = mean_power.

    The squared amplitude is Gamma(m, mean_power / m); numpy's gamma sampler
    is an exact rejection method.
    """
    if not m > 0:
        raise DomainError(f"Nakagami severity must be positive, got {m}")
    if not mean_power > 0:
        raise DomainError(f"mean power must be positive, got {mean_power}")
    return np.sqrt(rng.gamma(m, mean_power / m, size))  # type: ignore


def sample_complex_fading(
    m: float, rng: np.random.Generator, size: Size = None
) -> Union[complex, np.ndarray]:
    """Unit-power Nakagami-m magnitude with an independent uniform phase."""
    amplitude = sample_nakagami(m, 1.0, rng, size)
    phase = rng.uniform(0.0, 2.0 * math.pi, size)
    return amplitude * np.exp(1j * phase)  # type: ignore


def sample_generalized_k(
    params: ChannelParams, rng: np.random.Generator, size: Size = None
) -> Union[complex, np.ndarray]:
    """Shadowing amplitude times complex fading for one hop."""
    shadow = sample_nakagami(params.m_g, params.mean_shadow_power, rng, size)
    fade = sample_complex_fading(params.m_h, rng, size)
    return shadow * np.sqrt(params.mean_fade_power) * fade  # type: ignore


def select_map(
    shadow_amplitudes: Union[Sequence[float], np.ndarray]
) -> Union[int, np.ndarray]:
    """Index of the strongest mirror activation pattern.

    Accepts one list of N_pat amplitudes, or an array whose last axis holds
    the N_pat amplitudes of independent channel uses. Ties go to the lowest
    index.

    Raises:
        DomainError: If no pattern is given.
    """
    amplitudes = np.asarray(shadow_amplitudes, dtype=float)
    if amplitudes.ndim == 0 or amplitudes.shape[-1] == 0:
        raise DomainError("select_map needs at least one pattern")
    choice = np.argmax(amplitudes, axis=-1)
    if amplitudes.ndim == 1:
        return int(choice)
    return choice


def _round_half_up(value: float) -> int:
    return max(1, int(math.floor(value + 0.5)))


def lognormal_to_nakagami_exact(sigma_db: float) -> float:
    """Amplitude moment-matched Nakagami severity for log-normal shadowing."""
    if not sigma_db > 0:
        raise DomainError(f"sigma_dB must be positive, got {sigma_db}")
    sigma = sigma_db * math.log(10.0) / 20.0
    return 1.0 / math.expm1(sigma * sigma)


def lognormal_to_nakagami(sigma_db: float) -> int:
    """Integer Nakagami-m_g matching log-normal shadowing of ``sigma_db``."""
    return _round_half_up(lognormal_to_nakagami_exact(sigma_db))


def rician_k_to_nakagami_exact(k_db: float) -> float:
    """Nakagami severity (K + 1)^2 / (2K + 1) matching a Rician K factor."""
    if not math.isfinite(k_db):
        raise DomainError(f"K_dB must be finite, got {k_db}")
    k = 10.0 ** (k_db / 10.0)
    return (k + 1.0) ** 2 / (2.0 * k + 1.0)


def rician_k_to_nakagami(k_db: float) -> int:
    """Integer Nakagami-m_h matching Rician fading with factor ``k_db``."""
    return _round_half_up(rician_k_to_nakagami_exact(k_db))
