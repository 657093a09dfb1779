"""Monte-Carlo simulation of the UE -> UAV -> BS relay link.

Trials are split into fixed chunks of consecutive trial indices; chunk ``k``
always draws from ``RngStream(seed, k)``. Chunks are folded in index order
and the stopping rule is checked after each chunk, so a result depends only
on (config, max_trials, target_errors, seed, chunk_trials), never on how many
workers produced the chunks.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, List, NamedTuple, Optional, Tuple

import numpy as np

from mbm_relay.analysis import SystemConfig
from mbm_relay.channel import (
    RngStream,
    sample_complex_fading,
    sample_nakagami,
    select_map,
)
from mbm_relay.errors import ConfigurationError
from mbm_relay.logs import log

SUPPORTED_ORDERS = (2, 4, 16, 64)
DEFAULT_TARGET_ERRORS = 200
DEFAULT_MAX_TRIALS = 100_000_000
MIN_TRIALS = 10_000
DEFAULT_CHUNK_TRIALS = 16_384


@dataclass(frozen=True)
class Constellation:
    """Unit-energy constellation with Gray bit labels.

    Attributes:
        order: Number of points M.
        points: Complex symbols, indexed by symbol index.
        bit_labels: Gray label of each point as an integer of log2(M) bits.
    """

    order: int
    points: np.ndarray
    bit_labels: np.ndarray


def _gray(values: np.ndarray) -> np.ndarray:
    return values ^ (values >> 1)  # type: ignore


def gray_qam(order: int) -> Constellation:
    """BPSK for M = 2, otherwise Gray-labelled square M-QAM.

    Point ``i * L + q`` sits at in-phase level ``i`` and quadrature level
    ``q`` of an L-PAM grid, L = sqrt(M); its label concatenates the Gray codes
    of both levels.

    Raises:
        ConfigurationError: For an order outside 2, 4, 16, 64.
    """
    if order not in SUPPORTED_ORDERS:
        raise ConfigurationError(
            f"unsupported modulation order {order}. "
            f"Must be one of: {list(SUPPORTED_ORDERS)}"
        )
    if order == 2:
        return Constellation(
            order=2,
            points=np.array([1.0 + 0j, -1.0 + 0j]),
            bit_labels=np.array([0, 1]),
        )
    side = math.isqrt(order)
    half_bits = side.bit_length() - 1
    levels = np.arange(side)
    amplitudes = 2 * levels - (side - 1)
    in_phase, quadrature = np.meshgrid(levels, levels, indexing="ij")
    points = (
        amplitudes[in_phase.ravel()] + 1j * amplitudes[quadrature.ravel()]
    ) / math.sqrt(2.0 * (order - 1) / 3.0)
    labels = (_gray(in_phase.ravel()) << half_bits) | _gray(quadrature.ravel())
    return Constellation(order=order, points=points, bit_labels=labels)


@dataclass(frozen=True)
class SepEstimate:
    """Symbol error counts of one simulated quantity."""

    trials: int
    symbol_errors: int
    seed: int

    @property
    def sep(self) -> float:
        """errors / trials."""
        return self.symbol_errors / self.trials if self.trials else 0.0

    @property
    def std_error(self) -> float:
        """sqrt(p (1 - p) / trials)."""
        if not self.trials:
            return 0.0
        p = self.sep
        return math.sqrt(p * (1.0 - p) / self.trials)


class Hop1Draw(NamedTuple):
    """A batch of hop-1 channel uses."""

    tx_index: np.ndarray
    detected_index: np.ndarray
    selected_map: np.ndarray
    selected_shadow: np.ndarray


class TrialOutcome(NamedTuple):
    """A batch of complete relay trials.

    ``e2e_symbol_ok`` holds where the BS decision equals the UE symbol index.
    """

    hop1_symbol_ok: np.ndarray
    hop2_symbol_ok: np.ndarray
    e2e_symbol_ok: np.ndarray
    selected_map: np.ndarray


def _complex_noise(
    rng: np.random.Generator, shape: Tuple[int, ...]
) -> np.ndarray:
    """Circularly-symmetric complex Gaussian, unit variance."""
    return (  # type: ignore
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    ) / math.sqrt(2.0)


def _ml_decide(metric: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Row-wise argmin; exact ties go to a uniformly rotated candidate."""
    rows, candidates = metric.shape
    offset = rng.integers(candidates, size=rows)
    order = (offset[:, None] + np.arange(candidates)[None, :]) % candidates
    position = np.argmin(np.take_along_axis(metric, order, axis=1), axis=1)
    return (position + offset) % candidates  # type: ignore


def hop1_trial(
    config: SystemConfig,
    rng: np.random.Generator,
    size: int = 1,
    constellation: Optional[Constellation] = None,
) -> Hop1Draw:
    """Transmit ``size`` random M-QAM symbols from the UE to the UAV.

    For each use: N_pat shadowing amplitudes are drawn and the strongest MAP
    is selected; one complex fading coefficient is drawn for it; the UAV
    receives r = sqrt(Omega_1) g h s + n and decides by minimum distance.
    """
    points = (constellation or gray_qam(config.modulation_order)).points
    rows = np.arange(size)
    tx = rng.integers(config.modulation_order, size=size)
    shadow = sample_nakagami(
        config.hop1.m_g,
        config.hop1.mean_shadow_power,
        rng,
        (size, config.n_pat),
    )
    selected = select_map(shadow)
    selected_shadow = shadow[rows, selected]  # type: ignore
    fading = sample_complex_fading(config.hop1.m_h, rng, size)
    gain = math.sqrt(config.omega1) * selected_shadow * fading
    received = gain * points[tx] + _complex_noise(rng, (size,))
    metric = np.abs(received[:, None] - gain[:, None] * points[None, :]) ** 2
    return Hop1Draw(
        tx_index=tx,
        detected_index=_ml_decide(metric, rng),
        selected_map=np.asarray(selected),
        selected_shadow=selected_shadow,
    )


def hop2_trial(
    config: SystemConfig,
    tx_index: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Send MAP indices from the UAV to the BS and return the BS decisions.

    Only the ``tx_index`` column of the N_R x N_pat channel G o H is
    radiated; the BS compares the received vector with every column.
    """
    tx = np.asarray(tx_index, dtype=int).reshape(-1)
    size = tx.size
    shape = (size, config.n_r, config.n_pat)
    shadow = sample_nakagami(
        config.hop2.m_g, config.hop2.mean_shadow_power, rng, shape
    )
    fading = sample_complex_fading(config.hop2.m_h, rng, shape)
    columns = math.sqrt(config.omega2) * shadow * fading
    received = columns[np.arange(size), :, tx] + _complex_noise(
        rng, (size, config.n_r)
    )
    metric = np.sum(np.abs(received[:, :, None] - columns) ** 2, axis=1)
    return _ml_decide(metric, rng)


def run_trials(
    config: SystemConfig,
    rng: np.random.Generator,
    size: int,
    constellation: Optional[Constellation] = None,
) -> TrialOutcome:
    """Hop 1, decode-and-forward of the decided index, hop 2."""
    first = hop1_trial(config, rng, size, constellation)
    # the relay radiates the MAP whose index equals its QAM decision
    forwarded = first.detected_index
    decided = hop2_trial(config, forwarded, rng)
    return TrialOutcome(
        hop1_symbol_ok=first.detected_index == first.tx_index,
        hop2_symbol_ok=decided == forwarded,
        e2e_symbol_ok=decided == first.tx_index,
        selected_map=first.selected_map,
    )


class ChunkCounts(NamedTuple):
    """Error counters of one chunk of trials."""

    index: int
    trials: int
    hop1_errors: int
    hop2_errors: int
    e2e_errors: int


ChunkTask = Tuple[SystemConfig, int, int, int]


def _run_chunk(task: ChunkTask) -> ChunkCounts:
    config, seed, index, size = task
    rng = RngStream(seed, index).generator()
    constellation = gray_qam(config.modulation_order)
    outcome = run_trials(config, rng, size, constellation)
    return ChunkCounts(
        index=index,
        trials=size,
        hop1_errors=int(np.count_nonzero(~outcome.hop1_symbol_ok)),
        hop2_errors=int(np.count_nonzero(~outcome.hop2_symbol_ok)),
        e2e_errors=int(np.count_nonzero(~outcome.e2e_symbol_ok)),
    )


def _chunk_tasks(
    config: SystemConfig, seed: int, max_trials: int, chunk_trials: int
) -> List[ChunkTask]:
    count = -(-max_trials // chunk_trials)
    return [
        (
            config,
            seed,
            index,
            min(chunk_trials, max_trials - index * chunk_trials),
        )
        for index in range(count)
    ]


def _waves(tasks: List[ChunkTask], width: int) -> Iterator[List[ChunkTask]]:
    for start in range(0, len(tasks), width):
        yield tasks[start : start + width]


def _execute(
    tasks: List[ChunkTask], workers: int
) -> Iterator[Iterable[ChunkCounts]]:
    """Yield the counts of each wave of chunks, in chunk order."""
    if workers == 1:
        for wave in _waves(tasks, 1):
            yield map(_run_chunk, wave)
        return
    with ProcessPoolExecutor(max_workers=workers) as executor:
        for wave in _waves(tasks, 2 * workers):
            yield list(executor.map(_run_chunk, wave))


def run_e2e(
    config: SystemConfig,
    max_trials: int = DEFAULT_MAX_TRIALS,
    target_errors: int = DEFAULT_TARGET_ERRORS,
    seed: int = 0,
    workers: int = 1,
    chunk_trials: int = DEFAULT_CHUNK_TRIALS,
) -> Tuple[SepEstimate, SepEstimate, SepEstimate]:
    """Estimate the e2e, hop-1 and conditional hop-2 SEP by simulation.

    Stops after the first chunk at which ``target_errors`` e2e errors have
    accumulated, or after ``max_trials``.

    Returns:
        (e2e, hop1, hop2_conditional) estimates; the hop-2 estimate counts BS
        decisions differing from the index the relay actually forwarded.

    Raises:
        ConfigurationError: For workers < 1, max_trials < 10^4, or
            non-positive target_errors / chunk_trials.
    """
    if int(workers) != workers or workers < 1:
        raise ConfigurationError(f"workers must be an integer >= 1: {workers}")
    if max_trials < MIN_TRIALS:
        raise ConfigurationError(
            f"max_trials must be >= {MIN_TRIALS}: {max_trials}"
        )
    if target_errors < 1:
        raise ConfigurationError(
            f"target_errors must be >= 1: {target_errors}"
        )
    if chunk_trials < 1:
        raise ConfigurationError(f"chunk_trials must be >= 1: {chunk_trials}")

    tasks = _chunk_tasks(config, int(seed), int(max_trials), int(chunk_trials))
    trials = hop1_errors = hop2_errors = e2e_errors = 0
    done = False
    for wave in _execute(tasks, int(workers)):
        for counts in wave:
            trials += counts.trials
            hop1_errors += counts.hop1_errors
            hop2_errors += counts.hop2_errors
            e2e_errors += counts.e2e_errors
            if e2e_errors >= target_errors:
                done = True
                break
        if done:
            break
    log(
        msg="Simulation finished",
        data={
            "trials": trials,
            "e2e_errors": e2e_errors,
            "omega1": config.omega1,
            "omega2": config.omega2,
        },
    )
    return (
        SepEstimate(trials=trials, symbol_errors=e2e_errors, seed=int(seed)),
        SepEstimate(trials=trials, symbol_errors=hop1_errors, seed=int(seed)),
        SepEstimate(trials=trials, symbol_errors=hop2_errors, seed=int(seed)),
    )
