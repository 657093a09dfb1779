"""Command-line front end: experiment specs, sweeps and CSV emission.

Every command is a ``(body: dict) -> CommandResult`` handler registered in
``__DISPATCH__``; :func:`handle` routes an ``{"command", "body"}`` event to it
and :func:`main` builds that event from the command line.
"""
import argparse
import configparser
import csv
import dataclasses
import json
import math
import os
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from mbm_relay import analysis, simulator
from mbm_relay.channel import (
    lognormal_to_nakagami,
    lognormal_to_nakagami_exact,
    rician_k_to_nakagami,
    rician_k_to_nakagami_exact,
)
from mbm_relay.errors import (
    ConfigurationError,
    RelayError,
    SpecParseError,
    SpecValidationError,
    missing_required_keys,
)
from mbm_relay.geometry import (
    LinkBudget,
    LinkGeometry,
    db_to_linear,
    environment,
    link_snr_linear,
    noise_power_dbm,
    path_loss_linear,
    split_total_distance,
)
from mbm_relay.logs import log

WORKERS_ENV = "MBM_RELAY_WORKERS"
PRESET_DIR = Path(__file__).resolve().parent / "presets"
PRESETS = ("fig2", "fig3", "fig4")

SWEEP_AXES = {"snr_dB": "dB", "distance_m": "m"}
OUTPUTS = ("closed_form", "union_bound", "asymptotic", "simulation")
COLUMNS = (
    "x",
    "sep_closed",
    "sep_bound",
    "sep_asymp",
    "sep_sim",
    "sim_stderr",
    "trials",
)
# columns each requested output has to fill for a point to be complete
OUTPUT_COLUMNS = {
    "closed_form": ("sep_closed",),
    "union_bound": ("sep_bound",),
    "asymptotic": ("sep_asymp",),
    "simulation": ("sep_sim", "sim_stderr", "trials"),
}


class CommandError(RelayError):
    """Generic CommandError exception."""

    pass


class CommandInputError(CommandError, ConfigurationError):
    """Invalid arguments to a command or to CommandResult."""

    pass


class CommandResult:
    """Result of a command or of one evaluation inside a sweep.

    Arguments:
        response: A dict produced by the call.
        exc: An exception raised by the call.

    Attributes:
        body: A copy of the response argument, if any.
        exc: If the call raised an exception, it will be named here.
        error: A dict with a parsed stack trace from exc, or the failures the
            response reported.

    Raises:
        CommandInputError: If neither argument was both passed and has the
            correct type.
    """

    def __init__(
        self,
        response: Optional[Dict[str, Any]] = None,
        exc: Optional[Exception] = None,
    ):
        """Store the response, or the exception that replaced it."""
        if not isinstance(response, dict) and not isinstance(exc, Exception):
            raise CommandInputError("At least one argument is required")

        self.response = response
        self.body: Dict[str, Any] = response or {}
        self.exc: Optional[Exception] = exc

    @property
    def error(self) -> Dict[str, Any]:
        """Return the stacktrace or the reported failures, if any."""
        if self.exc:
            tb = traceback.TracebackException.from_exception(self.exc)
            return {
                "title": type(self.exc).__name__,
                "message": str(self.exc),
                "traceback": [line.split("\n") for line in tb.format()],
            }
        elif (self.response or {}).get("failures"):
            return {
                "title": "Response included failures",
                "message": (self.response or {}).get("failures"),
                "traceback": None,
            }
        else:
            return {}

    def __repr__(self) -> str:
        """Return a printable string representation of the object."""
        return repr(self.error) if self.error else repr(self.body)


def invoke(function: Callable[..., Any], **kwargs: Any) -> CommandResult:
    """Call a function and return the response as a CommandResult.

    Returns:
        CommandResult: If the call raised, the exc attribute will be set.
            Otherwise, the response attribute will be set.
    """
    try:
        r = function(**kwargs)
    except Exception as exc:
        return CommandResult(exc=exc)
    else:
        return CommandResult(response=r or {})


@dataclass(frozen=True)
class LinkSettings:
    """Radio and placement parameters shared by both hops."""

    tx_power_dbm: float = 23.0
    noise_density_dbm_hz: float = -174.0
    bandwidth_hz: float = 10e6
    carrier_hz: float = 2e9
    uav_height_m: float = 100.0
    pathloss_exponent: float = 2.0
    environment: str = "Urban"

    @property
    def noise_power_dbm(self) -> float:
        """Thermal noise over the configured bandwidth."""
        return noise_power_dbm(self.noise_density_dbm_hz, self.bandwidth_hz)


@dataclass(frozen=True)
class SimulationSettings:
    """Monte-Carlo controls; ``workers`` is None until resolved."""

    max_trials: int = simulator.DEFAULT_MAX_TRIALS
    target_errors: int = simulator.DEFAULT_TARGET_ERRORS
    seed: int = 0
    workers: Optional[int] = None
    mgf_samples: int = analysis.DEFAULT_MGF_SAMPLES
    quad_order: int = analysis.DEFAULT_QUAD_ORDER


@dataclass(frozen=True)
class ExperimentSpec:
    """A validated experiment with every default applied.

    ``m_g`` and ``m_h`` always hold the severities in use; when the file gave
    ``sigma_db`` / ``k_db`` they are the moment-matched values.
    """

    name: str
    sweep_axis: str
    sweep_values: Tuple[float, ...]
    outputs: Tuple[str, ...]
    modulation_order: int
    n_r: int
    m_g: int
    m_h: int
    sigma_db: Optional[float] = None
    k_db: Optional[float] = None
    preset: Optional[str] = None
    label: str = ""
    link: LinkSettings = LinkSettings()
    simulation: SimulationSettings = SimulationSettings()

    def system_config(
        self, omega1: float, omega2: float
    ) -> analysis.SystemConfig:
        """SystemConfig of one sweep point."""
        return analysis.SystemConfig.create(
            self.modulation_order,
            self.m_g,
            self.m_h,
            self.n_r,
            omega1,
            omega2,
        )


@dataclass
class SepPoint:
    """One row of a SepCurve; None marks a value that was not produced."""

    x: float
    sep_closed: Optional[float] = None
    sep_bound: Optional[float] = None
    sep_asymp: Optional[float] = None
    sep_sim: Optional[float] = None
    sim_stderr: Optional[float] = None
    trials: Optional[int] = None
    errors: List[Dict[str, Any]] = field(default_factory=list)

    def is_complete(self, outputs: Tuple[str, ...]) -> bool:
        """True when every column of every requested output is filled."""
        return not self.errors and all(
            getattr(self, column) is not None
            for output in outputs
            for column in OUTPUT_COLUMNS[output]
        )


@dataclass
class SepCurve:
    """Sweep results of one experiment."""

    name: str
    axis: str
    units: str
    outputs: Tuple[str, ...]
    label: str = ""
    points: List[SepPoint] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        """True when every point produced every requested output."""
        return all(point.is_complete(self.outputs) for point in self.points)


# spec files


def _parse_count(text: str) -> int:
    """Integer that may be written as 1e6."""
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text}")
    return int(value)


def _parse_seed(text: str) -> int:
    return int(text, 0)


def _parse_list(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


def _parse_sweep(text: str) -> Tuple[float, ...]:
    """Comma list, or an inclusive ``start:stop:step`` range."""
    if ":" not in text:
        return tuple(float(item) for item in _parse_list(text))
    parts = [float(part) for part in text.split(":")]
    if len(parts) != 3:
        raise ValueError(f"range must be start:stop:step, got '{text}'")
    start, stop, step = parts
    if not step > 0 or stop < start:
        raise ValueError(f"empty range '{text}'")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + index * step, 12) for index in range(count))


SCHEMA: Dict[str, Dict[str, Callable[[str], Any]]] = {
    "experiment": {
        "preset": str,
        "label": str,
        "sweep_axis": str,
        "sweep_values": _parse_sweep,
        "outputs": _parse_list,
    },
    "system": {
        "modulation_order": _parse_count,
        "n_r": _parse_count,
        "m_g": _parse_count,
        "m_h": _parse_count,
        "sigma_db": float,
        "k_db": float,
    },
    "link": {
        "tx_power_dbm": float,
        "noise_density_dbm_hz": float,
        "bandwidth_hz": float,
        "carrier_hz": float,
        "uav_height_m": float,
        "pathloss_exponent": float,
        "environment": str,
    },
    "simulation": {
        "max_trials": _parse_count,
        "target_errors": _parse_count,
        "seed": _parse_seed,
        "workers": _parse_count,
        "mgf_samples": _parse_count,
        "quad_order": _parse_count,
    },
}
REQUIRED_KEYS = [
    "experiment.sweep_axis",
    "experiment.sweep_values",
    "system.modulation_order",
    "system.n_r",
]


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    """Line number of ``key`` inside ``[section]``, if it can be found."""
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
        elif current == section:
            name = line.split("=", 1)[0].split(":", 1)[0].strip().lower()
            if name == key:
                return number
    return None


def _read_values(text: str, source: str) -> Dict[str, Dict[str, Any]]:
    """Parse INI text into typed values, section by section."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise SpecParseError(
            "line outside of any [section]", line=exc.lineno
        ) from exc
    except configparser.ParsingError as exc:
        raise SpecParseError(
            f"malformed line '{exc.errors[0][1].strip()}'",
            line=exc.errors[0][0],
        ) from exc
    except configparser.Error as exc:
        raise SpecParseError(
            exc.message.splitlines()[0],
            line=getattr(exc, "lineno", None),
            field=getattr(exc, "option", None),
        ) from exc

    values: Dict[str, Dict[str, Any]] = {}
    unknown: List[str] = []
    for section in parser.sections():
        known = SCHEMA.get(section.lower())
        if known is None:
            unknown.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in known:
                unknown.append(f"unknown key '{section}.{key}'")
                continue
            try:
                typed = known[key](raw.strip())
            except ValueError as exc:
                raise SpecParseError(
                    f"invalid value '{raw}': {exc}",
                    line=_line_of(text, section.lower(), key),
                    field=f"{section}.{key}",
                ) from exc
            values.setdefault(section.lower(), {})[key] = typed
    if unknown:
        raise SpecValidationError(unknown)
    return values


def _severity(
    values: Dict[str, Any],
    direct: str,
    matched: str,
    convert: Callable[[float], int],
    violations: List[str],
) -> Optional[int]:
    """Resolve m_g (or m_h) from the explicit value or the 3GPP input."""
    if direct in values and matched in values:
        violations.append(f"system.{matched} and system.{direct} are both set")
        return None
    if matched in values:
        try:
            return convert(values[matched])
        except RelayError as exc:
            violations.append(f"system.{matched}: {exc}")
            return None
    if direct not in values:
        violations.append(
            f"one of system.{direct} or system.{matched} is required"
        )
        return None
    if values[direct] < 1:
        violations.append(f"system.{direct} must be >= 1")
        return None
    return int(values[direct])


def _validate_sweep(
    axis: Optional[str], sweep: Tuple[float, ...], violations: List[str]
) -> None:
    if axis is not None and axis not in SWEEP_AXES:
        violations.append(
            f"experiment.sweep_axis must be one of {list(SWEEP_AXES)}: {axis}"
        )
    if not sweep:
        violations.append("experiment.sweep_values is empty")
    elif any(b <= a for a, b in zip(sweep, sweep[1:])):
        violations.append(
            "experiment.sweep_values must be strictly increasing"
        )
    if not all(math.isfinite(value) for value in sweep):
        violations.append("experiment.sweep_values must be finite")
    if axis == "distance_m" and sweep and sweep[0] < 0:
        violations.append("distances must be >= 0")


def _validate_link(link: LinkSettings, violations: List[str]) -> None:
    try:
        environment(link.environment)
    except ConfigurationError as exc:
        violations.append(f"link.environment: {exc}")
    for name in ("bandwidth_hz", "carrier_hz", "uav_height_m"):
        if not getattr(link, name) > 0:
            violations.append(f"link.{name} must be positive")
    if not link.pathloss_exponent >= 2:
        violations.append("link.pathloss_exponent must be >= 2")


def _validate_simulation(
    sim: SimulationSettings, violations: List[str]
) -> None:
    if sim.max_trials < simulator.MIN_TRIALS:
        violations.append(
            f"simulation.max_trials must be >= {simulator.MIN_TRIALS}"
        )
    if sim.target_errors < 1:
        violations.append("simulation.target_errors must be >= 1")
    if sim.workers is not None and sim.workers < 1:
        violations.append("simulation.workers must be >= 1")
    if not 0 <= sim.seed < 2 ** 64:
        violations.append("simulation.seed must be an unsigned 64-bit integer")
    if sim.mgf_samples < analysis.MIN_MGF_SAMPLES:
        violations.append(
            f"simulation.mgf_samples must be >= {analysis.MIN_MGF_SAMPLES}"
        )
    if sim.quad_order < 2:
        violations.append("simulation.quad_order must be >= 2")


def parse_spec(text: str, name: str = "spec") -> ExperimentSpec:
    """Parse and validate INI text; see :func:`load_spec`."""
    values = _read_values(text, name)
    found = [
        f"{section}.{key}" for section in values for key in values[section]
    ]
    violations: List[str] = []
    missing = [key for key in REQUIRED_KEYS if key not in found]
    if missing:
        err_msg = missing_required_keys(REQUIRED_KEYS, found)
        log(**err_msg)
        violations.append(err_msg["data"])

    experiment = values.get("experiment", {})
    system = values.get("system", {})
    axis = experiment.get("sweep_axis")
    sweep = experiment.get("sweep_values", ())
    if "sweep_values" in experiment or axis is not None:
        _validate_sweep(axis, sweep, violations)

    outputs = experiment.get("outputs", OUTPUTS[:3])
    bad_outputs = [output for output in outputs if output not in OUTPUTS]
    if bad_outputs or not outputs:
        violations.append(
            f"experiment.outputs must be a non-empty subset of {list(OUTPUTS)}"
        )

    order = system.get("modulation_order")
    if order is not None and order not in simulator.SUPPORTED_ORDERS:
        violations.append(
            f"system.modulation_order must be one of "
            f"{list(simulator.SUPPORTED_ORDERS)}: {order}"
        )
    if system.get("n_r", 1) < 1:
        violations.append("system.n_r must be >= 1")
    m_g = _severity(
        system, "m_g", "sigma_db", lognormal_to_nakagami, violations
    )
    m_h = _severity(
        system, "m_h", "k_db", rician_k_to_nakagami, violations
    )

    link = LinkSettings(**values.get("link", {}))
    _validate_link(link, violations)
    simulation = SimulationSettings(**values.get("simulation", {}))
    _validate_simulation(simulation, violations)

    if violations:
        log(
            msg="Experiment spec rejected",
            data={"spec": name, "violations": violations},
            level="critical",
        )
        raise SpecValidationError(violations)
    return ExperimentSpec(
        name=name,
        sweep_axis=str(axis),
        sweep_values=tuple(sweep),
        outputs=tuple(outputs),
        modulation_order=int(order),  # type: ignore
        n_r=int(system["n_r"]),
        m_g=int(m_g),  # type: ignore
        m_h=int(m_h),  # type: ignore
        sigma_db=system.get("sigma_db"),
        k_db=system.get("k_db"),
        preset=experiment.get("preset"),
        label=experiment.get("label", ""),
        link=link,
        simulation=simulation,
    )


def load_spec(path: os.PathLike) -> ExperimentSpec:  # type: ignore
    """Load an INI experiment spec.

    Raises:
        SpecParseError: If the file cannot be read or a value does not parse;
            carries the line and field when known.
        SpecValidationError: Listing every violated invariant.
    """
    spec_path = Path(path)
    try:
        text = spec_path.read_text()
    except OSError as exc:
        raise SpecParseError(f"cannot read spec '{spec_path}': {exc}") from exc
    return parse_spec(text, name=spec_path.stem)


def with_overrides(
    spec: ExperimentSpec,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    max_trials: Optional[int] = None,
) -> ExperimentSpec:
    """Apply command-line flags on top of the spec file."""
    changes = {
        key: value
        for key, value in (
            ("seed", seed),
            ("workers", workers),
            ("max_trials", max_trials),
        )
        if value is not None
    }
    if not changes:
        return spec
    simulation = dataclasses.replace(spec.simulation, **changes)
    violations: List[str] = []
    _validate_simulation(simulation, violations)
    if violations:
        raise SpecValidationError(violations)
    return dataclasses.replace(spec, simulation=simulation)


def resolve_workers(workers: Optional[int] = None) -> int:
    """Explicit value, else $MBM_RELAY_WORKERS, else 1."""
    if workers is not None:
        return int(workers)
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigurationError(
            f"{WORKERS_ENV} must be an integer, got '{raw}'"
        ) from exc
    if value < 1:
        raise ConfigurationError(f"{WORKERS_ENV} must be >= 1, got {value}")
    return value


# sweeps


def link_snrs(spec: ExperimentSpec, x: float) -> Tuple[float, float]:
    """Omega_1 and Omega_2 of one sweep point, linear."""
    if spec.sweep_axis == "snr_dB":
        omega = db_to_linear(x)
        return omega, omega
    link = spec.link
    env = environment(link.environment)
    noise = link.noise_power_dbm
    omegas = []
    for ground_distance in split_total_distance(x):
        geom = LinkGeometry(
            uav_height_m=link.uav_height_m,
            ground_distance_m=ground_distance,
            carrier_hz=link.carrier_hz,
            pathloss_exponent=link.pathloss_exponent,
        )
        budget = LinkBudget(
            tx_power_dbm=link.tx_power_dbm,
            noise_power_dbm=noise,
            path_loss_linear=path_loss_linear(env, geom),
        )
        omegas.append(link_snr_linear(budget))
    return omegas[0], omegas[1]


def _closed_form(config: analysis.SystemConfig) -> Dict[str, Any]:
    return {"sep_closed": analysis.hop1_sep_closed(config)}


def _union_bound(
    config: analysis.SystemConfig, hop1: float, sim: SimulationSettings
) -> Dict[str, Any]:
    hop2 = analysis.hop2_sep_bound(
        config, mgf_samples=sim.mgf_samples, quad_order=sim.quad_order
    )
    return {"sep_bound": analysis.e2e_sep(hop1, min(1.0, hop2))}


def _asymptotic(
    config: analysis.SystemConfig, hop1: float
) -> Dict[str, Any]:
    hop2 = analysis.hop2_sep_asymptotic(config)
    return {"sep_asymp": analysis.e2e_sep(hop1, min(1.0, hop2))}


def _simulation(
    config: analysis.SystemConfig, sim: SimulationSettings, workers: int
) -> Dict[str, Any]:
    e2e, _, _ = simulator.run_e2e(
        config,
        max_trials=sim.max_trials,
        target_errors=sim.target_errors,
        seed=sim.seed,
        workers=workers,
    )
    return {
        "sep_sim": e2e.sep,
        "sim_stderr": e2e.std_error,
        "trials": e2e.trials,
    }


def _record(point: SepPoint, output: str, result: CommandResult) -> None:
    if result.error:
        point.errors.append({"output": output, **result.error})
        log(
            msg="Sweep point failed",
            data={"x": point.x, "output": output, "error": result.error},
            level="warning",
        )
        return
    for key, value in result.body.items():
        setattr(point, key, value)


def evaluate_point(
    spec: ExperimentSpec, x: float, workers: int = 1
) -> SepPoint:
    """Compute every requested output at one sweep value.

    A failing output is recorded in ``point.errors`` and leaves its cells
    empty; the remaining outputs are still attempted.
    """
    point = SepPoint(x=x)
    snrs = invoke(lambda: dict(zip(("omega1", "omega2"), link_snrs(spec, x))))
    if snrs.error:
        _record(point, "geometry", snrs)
        return point
    made = invoke(lambda: {"config": spec.system_config(**snrs.body)})
    if made.error:
        _record(point, "system", made)
        return point
    config: analysis.SystemConfig = made.body["config"]
    sim = spec.simulation
    needs_hop1 = {"closed_form", "union_bound", "asymptotic"} & set(
        spec.outputs
    )
    hop1 = None
    if needs_hop1:
        closed = invoke(_closed_form, config=config)
        if "closed_form" in spec.outputs or closed.error:
            _record(point, "closed_form", closed)
        hop1 = closed.body.get("sep_closed")
    if hop1 is not None and "union_bound" in spec.outputs:
        _record(
            point,
            "union_bound",
            invoke(_union_bound, config=config, hop1=hop1, sim=sim),
        )
    if hop1 is not None and "asymptotic" in spec.outputs:
        _record(
            point, "asymptotic", invoke(_asymptotic, config=config, hop1=hop1)
        )
    if "simulation" in spec.outputs:
        _record(
            point,
            "simulation",
            invoke(_simulation, config=config, sim=sim, workers=workers),
        )
    return point


def run_experiment(spec: ExperimentSpec) -> SepCurve:
    """Evaluate every sweep point of ``spec`` in order.

    Deterministic for a fixed spec: the simulation uses the spec seed at every
    point and the analytical bound uses a fixed MGF seed.
    """
    workers = resolve_workers(spec.simulation.workers)
    curve = SepCurve(
        name=spec.name,
        axis=spec.sweep_axis,
        units=SWEEP_AXES[spec.sweep_axis],
        outputs=spec.outputs,
        label=spec.label,
    )
    for x in spec.sweep_values:
        start_t = time.time()
        point = evaluate_point(spec, x, workers=workers)
        curve.points.append(point)
        log(
            msg="Sweep point done",
            data={
                "spec": spec.name,
                "x": x,
                "complete": point.is_complete(spec.outputs),
                "duration": "{} ms".format(
                    round(1000 * (time.time() - start_t), 2)
                ),
            },
            level="info",
        )
    return curve


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def emit_csv(curve: SepCurve, path: os.PathLike) -> Path:  # type: ignore
    """Write the curve as CSV with the fixed ``COLUMNS`` header.

    Floats are written with ``repr`` (shortest text that reads back to the
    same double); values that were not produced are empty cells.
    """
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as handle_:
        writer = csv.writer(handle_, lineterminator="\n")
        writer.writerow(COLUMNS)
        for point in curve.points:
            writer.writerow([_cell(getattr(point, name)) for name in COLUMNS])
    return out


def read_csv(  # type: ignore
    path: os.PathLike,
) -> List[Dict[str, Optional[float]]]:
    """Read a file written by :func:`emit_csv`; empty cells become None."""
    with Path(path).open(newline="") as handle_:
        return [
            {
                key: float(value) if value else None
                for key, value in row.items()
            }
            for row in csv.DictReader(handle_)
        ]


def preset_files(name: str) -> List[Path]:
    """Checked-in spec files of a figure preset, in name order.

    Raises:
        ConfigurationError: For an unknown preset.
    """
    if name not in PRESETS:
        raise ConfigurationError(
            f"unknown preset '{name}'. Must be one of: {list(PRESETS)}"
        )
    return sorted(PRESET_DIR.glob(f"{name}_*.ini"))


# commands


def _curve_summary(curve: SepCurve, out: Path) -> Dict[str, Any]:
    summary: Dict[str, Any] = {
        "spec": curve.name,
        "csv": str(out),
        "points": len(curve.points),
    }
    failures = [
        {"x": point.x, "errors": point.errors}
        for point in curve.points
        if not point.is_complete(curve.outputs)
    ]
    if failures:
        summary["failures"] = failures
    return summary


def _run_one(spec: ExperimentSpec, out: Path) -> Dict[str, Any]:
    curve = run_experiment(spec)
    return _curve_summary(curve, emit_csv(curve, out))


def _overrides(body: Dict[str, Any]) -> Dict[str, Any]:
    return {
        key: body.get(key) for key in ("seed", "workers", "max_trials")
    }


def _run(body: Dict[str, Any]) -> CommandResult:
    """Run one experiment spec file.

    Keys:
        spec: Path of the INI spec. Required.

        out: CSV path. Defaults to ``<spec name>.csv`` in the working
        directory.

        seed, workers, max_trials: Override the spec's simulation section.

    Returns:
        CommandResult
    """
    if not isinstance(body.get("spec"), str):
        err_msg = missing_required_keys(["spec"], list(body))
        log(**err_msg)
        return CommandResult(exc=KeyError(err_msg))
    made = invoke(
        lambda: {
            "spec": with_overrides(load_spec(body["spec"]), **_overrides(body))
        }
    )
    if made.exc:
        return made
    spec: ExperimentSpec = made.body["spec"]
    out = Path(body.get("out") or f"{spec.name}.csv")
    return invoke(_run_one, spec=spec, out=out)


def _preset(body: Dict[str, Any]) -> CommandResult:
    """Run every spec file of a figure preset.

    Keys:
        name: fig2, fig3 or fig4. Required.

        out: Output directory, one CSV per spec file. Defaults to ``<name>``.

        seed, workers, max_trials: Override every spec's simulation section.

    Returns:
        CommandResult
    """
    if not isinstance(body.get("name"), str):
        err_msg = missing_required_keys(["name"], list(body))
        log(**err_msg)
        return CommandResult(exc=KeyError(err_msg))
    listed = invoke(lambda: {"files": preset_files(body["name"])})
    if listed.exc:
        return listed
    out_dir = Path(body.get("out") or body["name"])
    runs = []
    failures = []
    for spec_file in listed.body["files"]:
        result = invoke(
            lambda path=spec_file: _run_one(
                with_overrides(load_spec(path), **_overrides(body)),
                out_dir / f"{path.stem}.csv",
            )
        )
        if result.error:
            failures.append({"spec": spec_file.stem, **result.error})
        runs.append(result.body)
    response: Dict[str, Any] = {"preset": body["name"], "runs": runs}
    if failures:
        response["failures"] = failures
    return CommandResult(response=response)


def _convert(body: Dict[str, Any]) -> CommandResult:
    """Moment-match 3GPP shadowing / Rician inputs to Nakagami severities.

    Keys:
        sigma_db: Log-normal shadowing standard deviation, dB.

        k_db: Rician K factor, dB.

    At least one key is required.

    Returns:
        CommandResult with the rounded and un-rounded severities.
    """
    if body.get("sigma_db") is None and body.get("k_db") is None:
        err_msg = missing_required_keys(["sigma_db", "k_db"], list(body))
        log(**err_msg)
        return CommandResult(exc=KeyError(err_msg))

    def convert() -> Dict[str, Any]:
        response: Dict[str, Any] = {}
        if body.get("sigma_db") is not None:
            sigma_db = float(body["sigma_db"])
            response["sigma_db"] = sigma_db
            response["m_g"] = lognormal_to_nakagami(sigma_db)
            response["m_g_exact"] = lognormal_to_nakagami_exact(sigma_db)
        if body.get("k_db") is not None:
            k_db = float(body["k_db"])
            response["k_db"] = k_db
            response["m_h"] = rician_k_to_nakagami(k_db)
            response["m_h_exact"] = rician_k_to_nakagami_exact(k_db)
        return response

    return invoke(convert)


def _zeta(body: Dict[str, Any]) -> CommandResult:
    """Report zeta, Upsilon and the array/diversity gains of a configuration.

    Keys:
        spec: Path of an INI spec to take the system section from.

        modulation_order, m_g, m_h, n_r: Required unless ``spec`` is given.

    Returns:
        CommandResult
    """
    required = ["modulation_order", "m_g", "m_h", "n_r"]
    if isinstance(body.get("spec"), str):
        loaded = invoke(lambda: {"spec": load_spec(body["spec"])})
        if loaded.exc:
            return loaded
        system = {key: getattr(loaded.body["spec"], key) for key in required}
    elif all(body.get(key) is not None for key in required):
        system = {key: body[key] for key in required}
    else:
        err_msg = missing_required_keys(
            required, [key for key in body if body[key] is not None]
        )
        log(**err_msg)
        return CommandResult(exc=KeyError(err_msg))

    def report() -> Dict[str, Any]:
        config = analysis.SystemConfig.create(omega1=1.0, **system)
        return {
            "system": system,
            "gains": dataclasses.asdict(analysis.gains(config)),
            "bandwidth_efficiency": config.bandwidth_efficiency,
        }

    return invoke(report)


__DISPATCH__ = {
    "run": _run,
    "preset": _preset,
    "convert": _convert,
    "zeta": _zeta,
}


def handle(event: Dict[str, Any]) -> Dict[str, Any]:
    """Route a ``{"command", "body"}`` event to its handler.

    Unhandled exceptions of a command are returned in the response, never
    raised.

    Returns:
        A dict with the data to be returned to the invoker; ``msg`` is
        "response received" unless the command failed.
    """
    start_t = time.time()
    log(msg="event received", data=event, level="info")
    err_msg: Dict[str, str]
    try:
        command = event["command"]
        body = event["body"]
    except KeyError:
        err_msg = missing_required_keys(["command", "body"], list(event))
        log(**err_msg)
        return err_msg

    if command not in __DISPATCH__:
        err_msg = {
            "msg": f"Command not recognized: '{command}'.",
            "data": "Must be one of: {}".format(list(__DISPATCH__)),
            "level": "critical",
        }
        log(**err_msg)
        return err_msg

    result = __DISPATCH__[command](body)
    response: Dict[str, Any] = {
        "request_payload": {"command": command, "body": body}
    }
    response.update(result.error or result.body)
    msg = "command failed" if result.error else "response received"

    duration = "{} ms".format(round(1000 * (time.time() - start_t), 2))
    log(
        msg=msg,
        data={"response": response, "duration": duration},
        level="debug",
    )
    return {"msg": msg, "data": {"response": response, "duration": duration}}


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="CSV file (run) or directory (preset)")
    parser.add_argument("--seed", type=lambda text: int(text, 0))
    parser.add_argument("--workers", type=int)
    parser.add_argument("--max-trials", dest="max_trials", type=int)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of the ``mbm-relay`` console script."""
    parser = argparse.ArgumentParser(
        prog="mbm-relay",
        description="SEP analysis and simulation of a UAV relay with "
        "media-based modulation.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run an experiment spec file")
    run.add_argument("spec")
    _add_overrides(run)

    preset = commands.add_parser("preset", help="run a figure preset")
    preset.add_argument("name", choices=PRESETS)
    _add_overrides(preset)

    convert = commands.add_parser(
        "convert", help="moment-match sigma_dB / K_dB to m_g / m_h"
    )
    convert.add_argument("--sigma-db", dest="sigma_db", type=float)
    convert.add_argument("--k-db", dest="k_db", type=float)

    zeta = commands.add_parser("zeta", help="print zeta and the gains")
    zeta.add_argument("--spec")
    zeta.add_argument("--modulation-order", dest="modulation_order", type=int)
    zeta.add_argument("--m-g", dest="m_g", type=int)
    zeta.add_argument("--m-h", dest="m_h", type=int)
    zeta.add_argument("--n-r", dest="n_r", type=int)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Console entry-point; returns 0 iff the command fully succeeded.

    The response is written to stdout as one JSON line whatever the log
    level.
    """
    args = build_parser().parse_args(argv)
    body = {
        key: value
        for key, value in vars(args).items()
        if key != "command" and value is not None
    }
    result = handle({"command": args.command, "body": body})
    sys.stdout.write(json.dumps(result, default=str) + "\n")
    return 0 if result["msg"] == "response received" else 1


if __name__ == "__main__":
    sys.exit(main())
