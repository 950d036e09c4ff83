"""Latent scale / tail-index recursions, filtering and simulation.

The model is

    Q_t          = mu + sigma_t * max(Y1_t**(1/alpha1_t), Y2_t**(1/alpha2_t))
    log sigma_t  = beta0  + beta1  log sigma_{t-1}  - beta2  exp(-beta3  Q_{t-1})
    log alpha1_t = gamma0 + gamma1 log alpha1_{t-1} + gamma2 exp(-gamma3 Q_{t-1})
    log alpha2_t = delta0 + delta1 log alpha2_{t-1} + delta2 exp(-delta3 Q_{t-1})

A large loss ``Q_{t-1}`` raises the next scale and lowers both tail indices.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import _kernels

__all__ = [
    "PARAM_NAMES",
    "ModelSpec",
    "ParamVector",
    "LatentState",
    "LatentPath",
    "MaximaSeries",
    "SimulatedPath",
    "TABLE9_THETA",
    "init_state",
    "step_state",
    "filter_path",
    "simulate",
    "stationarity_probe",
    "StationarityReport",
    "uniform_stream",
]

PARAM_NAMES = (
    "beta0", "beta1", "beta2", "beta3",
    "gamma0", "gamma1", "gamma2", "gamma3",
    "delta0", "delta1", "delta2", "delta3",
    "mu",
)
_PERSISTENCE = ("beta1", "gamma1", "delta1")
_COEFFS = ("beta2", "beta3", "gamma2", "gamma3", "delta2", "delta3")


class ModelSpec(str, enum.Enum):
    """Model variant.

    ``ACAF_STATIC_ALPHA1`` pins ``log alpha1_t = gamma0`` (gamma1..gamma3 are
    zero); ``ACF`` keeps a single Frechet branch driven by the gamma block and
    zeroes the delta block.
    """

    ACAF_FULL = "acaf_full"
    ACAF_STATIC_ALPHA1 = "acaf_static_alpha1"
    ACF = "acf"

    @classmethod
    def parse(cls, value: "str | ModelSpec") -> "ModelSpec":
        if isinstance(value, cls):
            return value
        aliases = {"acaf": cls.ACAF_FULL, "acaf-static-a1": cls.ACAF_STATIC_ALPHA1}
        v = str(value).strip().lower()
        if v in aliases:
            return aliases[v]
        return cls(v.replace("-", "_"))

    @property
    def fixed(self) -> tuple[str, ...]:
        """Names of parameters held at zero by this variant."""
        if self is ModelSpec.ACAF_STATIC_ALPHA1:
            return ("gamma1", "gamma2", "gamma3")
        if self is ModelSpec.ACF:
            return ("delta0", "delta1", "delta2", "delta3")
        return ()

    @property
    def free(self) -> tuple[str, ...]:
        return tuple(n for n in PARAM_NAMES if n not in self.fixed)

    @property
    def two_branch(self) -> bool:
        return self is not ModelSpec.ACF


@dataclass(frozen=True)
class ParamVector:
    """The 13 model parameters.

    Coefficients ``beta2 .. delta3`` must be nonnegative (zero switches a
    shock off) and the persistences must lie in ``[0, 1)``.
    """

    beta0: float
    beta1: float
    beta2: float
    beta3: float
    gamma0: float
    gamma1: float
    gamma2: float
    gamma3: float
    delta0: float
    delta1: float
    delta2: float
    delta3: float
    mu: float

    def __post_init__(self) -> None:
        for f in fields(self):
            v = float(getattr(self, f.name))
            object.__setattr__(self, f.name, v)
            if not np.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v}")
        for name in _PERSISTENCE:
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        for name in _COEFFS:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "ParamVector":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (13,):
            raise ValueError(f"expected 13 parameters, got shape {arr.shape}")
        return cls(*arr.tolist())

    @classmethod
    def from_dict(cls, d: dict) -> "ParamVector":
        return cls(**{n: float(d.get(n, 0.0)) for n in PARAM_NAMES})

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in PARAM_NAMES])

    def to_dict(self) -> dict[str, float]:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def swap_blocks(self) -> "ParamVector":
        """Exchange the gamma and delta blocks (relabel the two branches)."""
        return replace(
            self,
            gamma0=self.delta0, gamma1=self.delta1, gamma2=self.delta2, gamma3=self.delta3,
            delta0=self.gamma0, delta1=self.gamma1, delta2=self.gamma2, delta3=self.gamma3,
        )

    def restrict(self, spec: ModelSpec) -> "ParamVector":
        """Zero the parameters a variant does not use."""
        return replace(self, **{n: 0.0 for n in ModelSpec.parse(spec).fixed})

    def check_spec(self, spec: ModelSpec) -> None:
        spec = ModelSpec.parse(spec)
        bad = [n for n in spec.fixed if getattr(self, n) != 0.0]
        if bad:
            raise ValueError(f"{spec.value} requires {bad} to be zero")


# Fitted S&P 500 values used as the simulation truth throughout.
TABLE9_THETA = ParamVector(
    beta0=-0.237, beta1=0.785, beta2=0.064, beta3=7.961,
    gamma0=0.224, gamma1=0.758, gamma2=0.421, gamma3=6.663,
    delta0=-0.038, delta1=0.91, delta2=0.421, delta3=4.732,
    mu=-0.242,
)


@dataclass(frozen=True)
class LatentState:
    sigma: float
    alpha1: float
    alpha2: float

    def __post_init__(self) -> None:
        for name in ("sigma", "alpha1", "alpha2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")

    def logs(self) -> tuple[float, float, float]:
        return float(np.log(self.sigma)), float(np.log(self.alpha1)), float(np.log(self.alpha2))


@dataclass(frozen=True)
class LatentPath:
    """Aligned arrays of ``sigma_t, alpha1_t, alpha2_t``."""

    sigma: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray

    @classmethod
    def from_logs(cls, logs: np.ndarray) -> "LatentPath":
        e = np.exp(logs)
        return cls(e[:, 0].copy(), e[:, 1].copy(), e[:, 2].copy())

    def __len__(self) -> int:
        return len(self.sigma)

    def __getitem__(self, t: int) -> LatentState:
        return LatentState(float(self.sigma[t]), float(self.alpha1[t]), float(self.alpha2[t]))

    def __iter__(self) -> Iterator[LatentState]:
        return (self[t] for t in range(len(self)))

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.sigma, self.alpha1, self.alpha2])

    def to_csv(self, path: str | Path, labels: Sequence | None = None) -> None:
        rows = (
            (labels[t] if labels is not None else t, self.sigma[t], self.alpha1[t], self.alpha2[t])
            for t in range(len(self))
        )
        _write_table(path, ("t", "sigma", "alpha1", "alpha2"), rows)

    @classmethod
    def from_csv(cls, path: str | Path) -> "LatentPath":
        cols = _read_table(path)
        return cls(*(np.array(cols[k], dtype=float) for k in ("sigma", "alpha1", "alpha2")))


@dataclass(frozen=True)
class MaximaSeries:
    """Observed maxima ``Q_t`` with optional labels (dates, timestamps)."""

    values: np.ndarray
    labels: tuple | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("a maxima series needs at least one observation")
        if not np.all(np.isfinite(v)):
            raise ValueError("maxima series contains non-finite values")
        object.__setattr__(self, "values", v)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != v.size:
                raise ValueError("labels and values differ in length")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.values.size

    @property
    def q_min(self) -> float:
        return float(self.values.min())

    def to_csv(self, path: str | Path) -> None:
        labels = self.labels if self.labels is not None else range(len(self))
        _write_table(path, ("t", "Q"), zip(labels, self.values))

    @classmethod
    def from_csv(cls, path: str | Path, column: str = "Q") -> "MaximaSeries":
        cols = _read_table(path)
        labels = cols.get("t")
        return cls(np.array(cols[column], dtype=float), tuple(labels) if labels else None)


@dataclass(frozen=True)
class SimulatedPath:
    series: MaximaSeries
    states: LatentPath
    noise: np.ndarray
    seed: int | None
    theta: ParamVector
    spec: ModelSpec = ModelSpec.ACAF_FULL
    burn_in: int = 0

    def to_csv(self, observations: str | Path, latent: str | Path) -> None:
        self.series.to_csv(observations)
        self.states.to_csv(latent)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{x:.15g}"
    return str(x)


def _write_table(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _read_table(path) -> dict[str, list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols: dict[str, list[str]] = {k: [] for k in reader.fieldnames or ()}
        for row in reader:
            for k, v in row.items():
                cols[k].append(v)
    return cols


def init_state(theta: ParamVector) -> LatentState:
    """Shock-free fixed point of the three log recursions."""
    return LatentState(
        sigma=float(np.exp(theta.beta0 / (1.0 - theta.beta1))),
        alpha1=float(np.exp(theta.gamma0 / (1.0 - theta.gamma1))),
        alpha2=float(np.exp(theta.delta0 / (1.0 - theta.delta1))),
    )


def step_state(theta: ParamVector, prev: LatentState, q_prev: float) -> LatentState:
    """Advance the latent state by one period given the previous maximum."""
    if np.isnan(q_prev) or q_prev == -np.inf:
        raise ValueError(f"q_prev must be finite, got {q_prev}")
    # q_prev = +inf is accepted as the shock-free limit.
    logs = _kernels.step_logs(theta.to_array(), *prev.logs(), float(q_prev))
    return LatentState(*(float(np.exp(v)) for v in logs))


def filter_path(
    theta: ParamVector, series: MaximaSeries | np.ndarray, init: LatentState | None = None
) -> LatentPath:
    """Reconstruct the latent path; ``states[t]`` uses observations before ``t`` only."""
    q = series.values if isinstance(series, MaximaSeries) else np.asarray(series, dtype=float)
    if q.size == 0:
        raise ValueError("cannot filter an empty series")
    init = init_state(theta) if init is None else init
    path = LatentPath.from_logs(_kernels.filter_logs(theta.to_array(), q, *init.logs()))
    _pin_first(path, init)
    return path


def _pin_first(path: LatentPath, init: LatentState) -> None:
    # exp(log(x)) can differ from x in the last bit; states[0] is init itself.
    path.sigma[0], path.alpha1[0], path.alpha2[0] = init.sigma, init.alpha1, init.alpha2


def uniform_stream(seed: int | None, n: int) -> np.ndarray:
    """``(n, 2)`` uniforms in the open interval (0, 1) from a Philox stream."""
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random((n, 2))
    u[u == 0.0] = np.nextafter(0.0, 1.0)
    return u


def simulate(
    theta: ParamVector,
    spec: ModelSpec | str = ModelSpec.ACAF_FULL,
    n: int = 1000,
    burn_in: int = 500,
    seed: int | None = None,
    init: LatentState | None = None,
) -> SimulatedPath:
    """Simulate ``n`` observations after discarding ``burn_in``.

    Noise is one uniform pair per step from a Philox stream keyed by ``seed``,
    so a path is reproducible from ``(theta, spec, n, burn_in, seed)``.
    """
    spec = ModelSpec.parse(spec)
    if n < 1 or burn_in < 0:
        raise ValueError("need n >= 1 and burn_in >= 0")
    theta.check_spec(spec)
    init = init_state(theta) if init is None else init
    u = uniform_stream(seed, n + burn_in)
    q, logs, noise = _kernels.simulate_logs(theta.to_array(), u, *init.logs(), spec.two_branch)
    states = LatentPath.from_logs(logs[burn_in:])
    if burn_in == 0:
        _pin_first(states, init)
    return SimulatedPath(
        series=MaximaSeries(q[burn_in:].copy()),
        states=states,
        noise=noise[burn_in:].copy(),
        seed=seed,
        theta=theta,
        spec=spec,
        burn_in=burn_in,
    )


@dataclass(frozen=True)
class StationarityReport:
    """Half-sample comparison of the latent logs.

    ``z`` holds (first-half mean - second-half mean) divided by a batch-means
    standard error, for ``log sigma``, ``log alpha1``, ``log alpha2``.
    ``lag1`` holds the lag-one autocorrelations.
    """

    z: np.ndarray
    lag1: np.ndarray
    batch: int
    n: int
    max_abs_z: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "max_abs_z", float(np.nanmax(np.abs(self.z))))


def _batch_means_var(x: np.ndarray, batch: int) -> float:
    k = x.size // batch
    means = x[: k * batch].reshape(k, batch).mean(axis=1)
    # Variance of the overall mean.
    return float(means.var(ddof=1) / k)


def stationarity_probe(
    theta: ParamVector,
    n: int = 20000,
    seed: int | None = 0,
    burn_in: int = 500,
    spec: ModelSpec | str = ModelSpec.ACAF_FULL,
) -> StationarityReport:
    """Simulate ``2n`` points and compare the halves of each latent log."""
    path = simulate(theta, spec, 2 * n, burn_in=burn_in, seed=seed)
    logs = np.log(path.states.as_array())
    batch = max(1, int(np.sqrt(n)))
    z = np.empty(3)
    lag1 = np.empty(3)
    for j in range(3):
        a, b = logs[:n, j], logs[n:, j]
        se = np.sqrt(_batch_means_var(a, batch) + _batch_means_var(b, batch))
        diff = a.mean() - b.mean()
        z[j] = diff / se if se > 0 else (0.0 if diff == 0 else np.inf)
        x = logs[:, j] - logs[:, j].mean()
        denom = float(x @ x)
        lag1[j] = float(x[1:] @ x[:-1]) / denom if denom > 0 else np.nan
    return StationarityReport(z=z, lag1=lag1, batch=batch, n=n)
