"""
Identification of the asymmetric second order model from recorded command and odometry logs.

Pipeline: Hann smoothing of measured velocities, two central finite differences, split of the samples into
acceleration and deceleration regimes by the sign of error times velocity, four linear least squares fits of
``acc' = f^2 * delta - 2 * zeta * f * acc`` and extraction of the empirical saturations.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict
from scipy import ndimage, optimize, signal

from kinonav.core.exceptions import (
    DataError,
    InvalidParamsError,
    ParseError,
    UnidentifiableRegimeError,
    UnsortedTimestampsError,
    UnstableFitError,
)
from kinonav.core.model import ActionSpace, AxisParams, SecondOrderParams, VelocityCommand
from kinonav.core.utility import as_array, format_float, read_key_value_file
from kinonav.motion.dynamics import StateColumns, substep_arrays

logger = logging.getLogger(__name__)

LOG_HEADER = ("t", "v_cmd", "w_cmd", "v_meas", "w_meas")
DEFAULT_WINDOW = 21
AXES = ("linear", "angular")
REGIMES = ("up", "down")
_SHORT_AXIS = {"linear": "lin", "angular": "ang"}

# Share of the velocity range treated as touching a bound, and of the regime maximum treated as acceleration clipping
VELOCITY_BOUND_TOLERANCE = 0.01
ACCELERATION_BOUND_RATIO = 0.95


@dataclass(frozen=True, eq=False)
class TrajectoryLog:
    """
    Timestamped command and odometry samples of one recorded drive
    """

    t: NDArray[np.float64]
    v_cmd: NDArray[np.float64]
    w_cmd: NDArray[np.float64]
    v_meas: NDArray[np.float64]
    w_meas: NDArray[np.float64]

    def __post_init__(self) -> None:
        lengths = {len(self.t), len(self.v_cmd), len(self.w_cmd), len(self.v_meas), len(self.w_meas)}
        if len(lengths) != 1:
            raise DataError("All log columns must have the same length")
        if np.any(np.diff(self.t) <= 0):
            raise UnsortedTimestampsError("Log timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def nominal_rate(self) -> float:
        return float(1.0 / np.median(np.diff(self.t))) if len(self) > 1 else 0.0

    def commands(self, axis: str) -> NDArray[np.float64]:
        return self.v_cmd if axis == "linear" else self.w_cmd

    def measurements(self, axis: str) -> NDArray[np.float64]:
        return self.v_meas if axis == "linear" else self.w_meas

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for column in (self.t, self.v_cmd, self.w_cmd, self.v_meas, self.w_meas):
            digest.update(np.ascontiguousarray(column, dtype=np.float64).tobytes())
        return digest.hexdigest()

    @staticmethod
    def from_columns(
        t: ArrayLike,
        v_cmd: ArrayLike,
        w_cmd: ArrayLike,
        v_meas: ArrayLike,
        w_meas: ArrayLike,
    ) -> TrajectoryLog:
        return TrajectoryLog(as_array(t), as_array(v_cmd), as_array(w_cmd), as_array(v_meas), as_array(w_meas))

    @staticmethod
    def read_csv(path: Path) -> TrajectoryLog:
        """
        Read a log written with header ``t,v_cmd,w_cmd,v_meas,w_meas``
        :param path: the csv file
        :return: the log
        :raises ParseError: with the offending line number on malformed input
        """
        if not path.exists():
            raise ParseError(str(path), None, "file does not exist")
        rows: list[list[float]] = []
        with path.open(encoding="utf-8", mode="r", newline="") as fle:
            reader = csv.reader(fle)
            header = next(reader, None)
            if header is None:
                raise ParseError(str(path), 1, "empty file, expected a header")
            if tuple(name.strip() for name in header) != LOG_HEADER:
                raise ParseError(str(path), 1, f"expected header {','.join(LOG_HEADER)}")
            for row in reader:
                if not row:
                    continue
                if len(row) != len(LOG_HEADER):
                    raise ParseError(str(path), reader.line_num, f"expected {len(LOG_HEADER)} values, got {len(row)}")
                try:
                    rows.append([float(value) for value in row])
                except ValueError as exc:
                    raise ParseError(str(path), reader.line_num, "non numeric value") from exc
        if not rows:
            raise ParseError(str(path), None, "log holds no samples")
        data = np.array(rows)
        try:
            return TrajectoryLog.from_columns(*data.T)
        except UnsortedTimestampsError as exc:
            raise ParseError(str(path), None, str(exc)) from exc

    def write_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open(encoding="utf-8", mode="w", newline="") as fle:
            writer = csv.writer(fle, lineterminator="\n")
            writer.writerow(LOG_HEADER)
            for row in zip(self.t, self.v_cmd, self.w_cmd, self.v_meas, self.w_meas, strict=True):
                writer.writerow([format_float(value) for value in row])


class IdentifiedModel(BaseModel):
    """
    Identified parameters together with the fit quality of each regime. Regimes are keyed ``linear/up`` ...
    """

    model_config = ConfigDict(frozen=True)

    params: SecondOrderParams
    residuals: dict[str, float]
    sample_counts: dict[str, int]

    def to_document(self) -> list[str]:
        lines = self.params.to_document()
        for regime in sorted(self.residuals):
            lines.append(f"meta.residual_{_meta_key(regime)} = {format_float(self.residuals[regime])}")
        for regime in sorted(self.sample_counts):
            lines.append(f"meta.count_{_meta_key(regime)} = {self.sample_counts[regime]}")
        return lines

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.to_document()) + "\n", encoding="utf-8")

    @staticmethod
    def read(path: Path) -> IdentifiedModel:
        values = read_key_value_file(path)
        residuals = {}
        counts = {}
        for name, raw in values.items():
            if name.startswith("meta.residual_"):
                residuals[_regime_from_meta(name.removeprefix("meta.residual_"))] = float(raw)
            elif name.startswith("meta.count_"):
                counts[_regime_from_meta(name.removeprefix("meta.count_"))] = int(raw)
        return IdentifiedModel(
            params=SecondOrderParams.from_document(values),
            residuals=residuals,
            sample_counts=counts,
        )


def _meta_key(regime: str) -> str:
    axis, _, direction = regime.partition("/")
    return f"{_SHORT_AXIS.get(axis, axis)}_{direction}"


def _regime_from_meta(key: str) -> str:
    short, _, direction = key.partition("_")
    axis = next((name for name, value in _SHORT_AXIS.items() if value == short), short)
    return f"{axis}/{direction}"


def read_params(path: Path) -> SecondOrderParams:
    """
    Read a model file, ignoring its meta lines
    :param path: the key-value model document
    :return: the parameters
    """
    return SecondOrderParams.from_document(read_key_value_file(path))


def smooth(values: ArrayLike, window: int = DEFAULT_WINDOW) -> NDArray[np.float64]:
    """
    Hann weighted moving average. Near the ends the window is truncated and renormalized, so the output keeps the
    input length.
    :param values: the signal
    :param window: odd window size of at least 3
    :return: the smoothed signal
    """
    signal_ = as_array(values)
    if window < 3 or window % 2 == 0:
        raise DataError(f"Smoothing window must be odd and at least 3, got {window}")
    if len(signal_) < window:
        raise DataError(f"Smoothing window {window} is longer than the signal ({len(signal_)} samples)")
    weights = signal.windows.hann(window, sym=True)
    weights /= weights.sum()
    coverage = np.convolve(np.ones_like(signal_), weights, mode="same")
    return np.convolve(signal_, weights, mode="same") / coverage


def central_diff(values: ArrayLike, timestamps: ArrayLike) -> NDArray[np.float64]:
    """
    Central finite difference at the interior samples
    :param values: the signal
    :param timestamps: strictly increasing sample times
    :return: derivative estimates, two samples shorter than the input
    """
    signal_ = as_array(values)
    t = as_array(timestamps)
    if len(signal_) != len(t) or len(t) < 3:
        raise DataError("central_diff needs equal length inputs of at least 3 samples")
    if np.any(np.diff(t) <= 0):
        raise UnsortedTimestampsError("Timestamps must be strictly increasing")
    return (signal_[2:] - signal_[:-2]) / (t[2:] - t[:-2])


def partition_regimes(delta: ArrayLike, vel: ArrayLike) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    """
    Split sample indices by the sign of delta * vel. Zero products belong to neither regime.
    :return: (acceleration indices, deceleration indices)
    """
    product = as_array(delta) * as_array(vel)
    return np.flatnonzero(product > 0), np.flatnonzero(product < 0)


def fit_regime(
    delta: ArrayLike,
    vel_dot: ArrayLike,
    vel_ddot: ArrayLike,
    regime: str = "regime",
) -> tuple[float, float, float]:
    """
    Least squares fit of ``vel_ddot = a * delta + b * vel_dot`` with a = f^2 and b = -2 * zeta * f, solved through the
    normal equations
    :param delta: command minus velocity
    :param vel_dot: acceleration
    :param vel_ddot: jerk
    :param regime: name used in error messages
    :return: (f, zeta, rms residual)
    :raises UnidentifiableRegimeError: on fewer than 2 samples or a rank deficient design
    :raises UnstableFitError: when the fit is not a stable second order response
    """
    design = np.column_stack([as_array(delta), as_array(vel_dot)])
    target = as_array(vel_ddot)
    if len(design) < 2:
        raise UnidentifiableRegimeError(regime, f"needs at least 2 samples, got {len(design)}")
    if np.linalg.matrix_rank(design) < 2:
        raise UnidentifiableRegimeError(regime, "design matrix is rank deficient, the regime was not excited")
    a, b = np.linalg.solve(design.T @ design, design.T @ target)
    if a <= 0:
        raise UnstableFitError(regime, f"squared natural frequency is not positive ({a:.6g})")
    f = float(np.sqrt(a))
    zeta = float(-b / (2.0 * f))
    if zeta <= 0:
        raise UnstableFitError(regime, f"damping is not positive ({zeta:.6g})")
    rms = float(np.sqrt(np.mean((design @ np.array([a, b]) - target) ** 2)))
    return f, zeta, rms


@dataclass(frozen=True)
class AxisSamples:
    """
    Aligned samples of one axis after smoothing and differentiation. ``usable`` flags samples eligible for fitting.
    """

    delta: NDArray[np.float64]
    vel: NDArray[np.float64]
    acc: NDArray[np.float64]
    jerk: NDArray[np.float64]
    usable: NDArray[np.bool_]

    def __len__(self) -> int:
        return len(self.vel)

    @staticmethod
    def concatenate(parts: Sequence[AxisSamples]) -> AxisSamples:
        return AxisSamples(
            *(np.concatenate([getattr(part, name) for part in parts]) for name in ("delta", "vel", "acc", "jerk")),
            usable=np.concatenate([part.usable for part in parts]),
        )

    def restrict(self, mask: NDArray[np.bool_]) -> AxisSamples:
        return AxisSamples(self.delta, self.vel, self.acc, self.jerk, self.usable & mask)


@dataclass(frozen=True)
class AxisSaturation:
    """Empirical velocity extrema and per regime absolute acceleration maxima of one axis"""

    vel_max: float
    vel_min: float
    acc_up_max: float
    acc_down_max: float


def _dilate(mask: NDArray[np.bool_], radius: int) -> NDArray[np.bool_]:
    if not mask.any():
        return mask
    return ndimage.binary_dilation(mask, structure=np.ones(2 * radius + 1, dtype=bool))


def differentiate(log: TrajectoryLog, axis: str, window: int = DEFAULT_WINDOW) -> AxisSamples:
    """
    Smooth and twice differentiate one axis of a log. The first derivative exists on samples 1..K-2 and the second
    on 2..K-3, so every returned array is aligned to samples 2..K-3.

    Samples whose smoothing and difference stencils reach across a command change, or across a change of regime,
    are flagged unusable for fitting.
    """
    if len(log) < 2 * window + 5:
        raise DataError(f"Log of {len(log)} samples is too short for a smoothing window of {window}")
    vel_s = smooth(log.measurements(axis), window)
    acc = central_diff(vel_s, log.t)
    jerk = central_diff(acc, log.t[1:-1])
    vel = vel_s[2:-2]
    cmd = log.commands(axis)
    delta = cmd[2:-2] - vel
    reach = window + 2
    switches = np.zeros(len(log), dtype=bool)
    switches[1:] = cmd[1:] != cmd[:-1]
    regime = np.sign(delta * vel)
    regime_changes = np.zeros(len(vel), dtype=bool)
    regime_changes[1:] = regime[1:] != regime[:-1]
    unusable = _dilate(switches, reach)[2:-2] | _dilate(regime_changes, reach)
    return AxisSamples(delta=delta, vel=vel, acc=acc[1:-1], jerk=jerk, usable=~unusable)


def extract_saturations(samples: AxisSamples) -> AxisSaturation:
    """
    Velocity extrema over all samples and absolute acceleration maxima within each regime
    :param samples: samples of one axis, typically concatenated over all logs
    :return: the saturation limits, 0 for a regime without samples
    :raises DataError: on empty input
    """
    if len(samples) == 0:
        raise DataError("Cannot extract saturations from an empty sample set")
    up, down = partition_regimes(samples.delta, samples.vel)
    acc_abs = np.abs(samples.acc)
    return AxisSaturation(
        vel_max=float(samples.vel.max()),
        vel_min=float(samples.vel.min()),
        acc_up_max=float(acc_abs[up].max()) if up.size else 0.0,
        acc_down_max=float(acc_abs[down].max()) if down.size else 0.0,
    )


def _saturated(samples: AxisSamples, saturation: AxisSaturation, window: int) -> NDArray[np.bool_]:
    tolerance = VELOCITY_BOUND_TOLERANCE * max(saturation.vel_max - saturation.vel_min, 1e-9)
    at_bound = (samples.vel >= saturation.vel_max - tolerance) | (samples.vel <= saturation.vel_min + tolerance)
    up, down = partition_regimes(samples.delta, samples.vel)
    clipped = np.zeros(len(samples), dtype=bool)
    acc_abs = np.abs(samples.acc)
    clipped[up] = acc_abs[up] >= ACCELERATION_BOUND_RATIO * saturation.acc_up_max
    clipped[down] = acc_abs[down] >= ACCELERATION_BOUND_RATIO * saturation.acc_down_max
    return _dilate(at_bound | clipped, window + 2)


def _ordered(logs: Sequence[TrajectoryLog]) -> list[TrajectoryLog]:
    # content order, so the result does not depend on the order logs were given in
    return sorted(logs, key=lambda log: log.fingerprint())


def identify(logs: Sequence[TrajectoryLog], window: int = DEFAULT_WINDOW) -> IdentifiedModel:
    """
    Identify the 8 model parameters and the saturation limits from a set of logs
    :param logs: logs that jointly excite all four regimes
    :param window: smoothing window in samples
    :return: the identified model with per regime residuals and sample counts
    :raises UnidentifiableRegimeError: naming the first regime that could not be fitted
    """
    if not logs:
        raise DataError("At least one log is required for identification")
    ordered = _ordered(logs)
    axes: dict[str, AxisParams] = {}
    residuals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for axis in AXES:
        per_log = [differentiate(log, axis, window) for log in ordered]
        saturation = extract_saturations(AxisSamples.concatenate(per_log))
        samples = AxisSamples.concatenate(
            [part.restrict(~_saturated(part, saturation, window)) for part in per_log],
        )
        up, down = partition_regimes(samples.delta, samples.vel)
        fits = {}
        for direction, indices in zip(REGIMES, (up, down), strict=True):
            selected = indices[samples.usable[indices]]
            regime = f"{axis}/{direction}"
            fits[direction] = fit_regime(samples.delta[selected], samples.acc[selected], samples.jerk[selected], regime)
            residuals[regime] = fits[direction][2]
            counts[regime] = int(selected.size)
            logger.debug("Fitted %s on %s samples: f=%s zeta=%s", regime, selected.size, *fits[direction][:2])
        axes[axis] = AxisParams(
            f_up=fits["up"][0],
            zeta_up=fits["up"][1],
            f_down=fits["down"][0],
            zeta_down=fits["down"][1],
            vel_max=max(saturation.vel_max, 0.0),
            vel_min=min(saturation.vel_min, 0.0),
            acc_up_max=saturation.acc_up_max,
            acc_down_max=saturation.acc_down_max,
        )
    logger.info("Identified model from %s logs", len(logs))
    return IdentifiedModel(params=SecondOrderParams(**axes), residuals=residuals, sample_counts=counts)


def rise_time(f: float, zeta: float) -> float:
    """
    10-90% rise time of the unit step response of f^2 / (s^2 + 2 zeta f s + f^2)
    :param f: natural frequency in rad/s
    :param zeta: damping ratio
    :return: rise time in seconds
    """
    if f <= 0 or zeta <= 0:
        raise InvalidParamsError(f"rise time needs positive f and zeta, got f={f} zeta={zeta}")
    horizon = (50.0 + 10.0 * zeta) / f
    system = signal.TransferFunction([f * f], [1.0, 2.0 * zeta * f, f * f])
    t, response = system.step(T=np.linspace(0.0, horizon, 20001))
    return _crossing(t, response, 0.9) - _crossing(t, response, 0.1)


def _crossing(t: NDArray[np.float64], response: NDArray[np.float64], level: float) -> float:
    index = int(np.argmax(response >= level))
    if index == 0:
        return float(t[0])
    return float(np.interp(level, response[index - 1 : index + 1], t[index - 1 : index + 1]))


def _matched_frequency(f: float, zeta: float, zeta_target: float) -> float:
    target = rise_time(f, zeta)
    return float(
        optimize.brentq(lambda candidate: rise_time(candidate, zeta_target) - target, 0.05 * f, 20.0 * f, xtol=1e-9),
    )


def adjust_damping(model: IdentifiedModel, zeta_target: float = 0.7) -> IdentifiedModel:
    """
    Set every damping ratio to zeta_target and rescale each natural frequency so the step response keeps its rise
    time
    :param model: the identified model
    :param zeta_target: the common damping ratio
    :return: the adjusted model, residuals and counts carried over
    """
    if zeta_target <= 0:
        raise InvalidParamsError(f"zeta_target must be positive, got {zeta_target}")
    axes = {}
    for axis in AXES:
        params: AxisParams = getattr(model.params, axis)
        axes[axis] = params.model_copy(
            update={
                "f_up": _matched_frequency(params.f_up, params.zeta_up, zeta_target),
                "zeta_up": zeta_target,
                "f_down": _matched_frequency(params.f_down, params.zeta_down, zeta_target),
                "zeta_down": zeta_target,
            },
        )
    return model.model_copy(update={"params": SecondOrderParams(**axes)})


def step_script(rng: np.random.Generator | None = None) -> list[VelocityCommand]:
    """
    Command script stepping through all 28 discrete actions, shuffled when a generator is given
    :param rng: optional generator for the visiting order
    :return: one command per hold
    """
    commands = list(ActionSpace.COMMANDS)
    if rng is not None:
        commands = [commands[index] for index in rng.permutation(len(commands))]
    return commands


def synthesize_logs(
    scripts: Sequence[Sequence[VelocityCommand]],
    params: SecondOrderParams,
    hold: float = 3.0,
    rate: float = 100.0,
    oversample: int = 10,
    noise_std: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[TrajectoryLog]:
    """
    Forward simulate command scripts from rest and record them like an odometry log. The physics runs ``oversample``
    times faster than the recording rate; all scripts are simulated together and must have the same length.
    :param scripts: command scripts, each command held for ``hold`` seconds
    :param params: the generating model
    :param hold: seconds per command
    :param rate: recording rate in Hz
    :param oversample: physics substeps per recorded sample
    :param noise_std: standard deviation of Gaussian noise added to measured velocities
    :param rng: generator for the measurement noise
    :return: one log per script
    """
    if not scripts or len({len(script) for script in scripts}) != 1:
        raise DataError("Scripts must be non empty and of equal length")
    if noise_std > 0 and rng is None:
        raise DataError("A generator is required for measurement noise")
    per_hold = round(hold * rate)
    count = len(scripts[0]) * per_hold
    commands = np.array([[command.as_tuple() for command in script] for script in scripts])
    dt = 1.0 / (rate * oversample)
    columns: StateColumns = tuple(np.zeros(len(scripts)) for _ in range(7))  # type: ignore[assignment]
    recorded = np.empty((count, len(scripts), 4))
    for sample in range(count):
        v_star = commands[:, sample // per_hold, 0]
        w_star = commands[:, sample // per_hold, 1]
        recorded[sample] = np.column_stack([v_star, w_star, columns[3], columns[4]])
        for _ in range(oversample):
            columns = substep_arrays(columns, v_star, w_star, params, dt)
    if noise_std > 0 and rng is not None:
        recorded[:, :, 2:] += rng.normal(0.0, noise_std, size=recorded[:, :, 2:].shape)
    t = np.arange(count) / rate
    return [TrajectoryLog.from_columns(t, *recorded[:, index].T) for index in range(len(scripts))]


def synthesize_log(
    script: Sequence[VelocityCommand],
    params: SecondOrderParams,
    **kwargs: float | int | np.random.Generator | None,
) -> TrajectoryLog:
    """Single script convenience wrapper around synthesize_logs"""
    return synthesize_logs([script], params, **kwargs)[0]  # type: ignore[arg-type]
