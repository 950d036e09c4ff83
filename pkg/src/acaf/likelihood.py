"""Conditional log-likelihood, parameter transforms and per-observation scores."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import (
    PARAM_NAMES,
    LatentState,
    MaximaSeries,
    ModelSpec,
    ParamVector,
    init_state,
)

__all__ = [
    "ParamTransform",
    "per_obs_loglik",
    "loglik",
    "nll",
    "score_matrix",
    "NLL_PENALTY",
]

# Returned by nll when the filtered recursion leaves floating-point range.
NLL_PENALTY = 1e100

_IDENTITY = frozenset({"beta0", "gamma0", "delta0"})
_LOGIT = frozenset({"beta1", "gamma1", "delta1"})
_INDEX = {n: i for i, n in enumerate(PARAM_NAMES)}


def _as_values(series) -> np.ndarray:
    if isinstance(series, MaximaSeries):
        return series.values
    return np.ascontiguousarray(series, dtype=float)


def _init_logs(th: np.ndarray) -> tuple[float, float, float]:
    # Shock-free fixed points, in logs; same rule as dynamics.init_state.
    return th[0] / (1.0 - th[1]), th[4] / (1.0 - th[5]), th[8] / (1.0 - th[9])


@dataclass(frozen=True)
class ParamTransform:
    """Bijection between the free parameters of a variant and unconstrained reals.

    Intercepts pass through, persistences go through a logit, shock
    coefficients through a log, and the location through
    ``mu = q_min - exp(z_mu)`` so that every ``z`` keeps ``mu`` strictly below
    the smallest observation.
    """

    q_min: float
    spec: ModelSpec = ModelSpec.ACAF_FULL

    def __post_init__(self) -> None:
        object.__setattr__(self, "spec", ModelSpec.parse(self.spec))

    @property
    def names(self) -> tuple[str, ...]:
        return self.spec.free

    @property
    def index(self) -> np.ndarray:
        return np.array([_INDEX[n] for n in self.names])

    def to_z(self, theta: ParamVector) -> np.ndarray:
        z = np.empty(len(self.names))
        for k, name in enumerate(self.names):
            v = getattr(theta, name)
            if name in _IDENTITY:
                z[k] = v
            elif name in _LOGIT:
                z[k] = np.log(v) - np.log1p(-v)
            elif name == "mu":
                if not v < self.q_min:
                    raise ValueError(f"mu={v} must be below the sample minimum {self.q_min}")
                z[k] = np.log(self.q_min - v)
            else:
                z[k] = np.log(v)
        return z

    def to_array(self, z: np.ndarray) -> np.ndarray:
        """Full 13-vector for ``z``; fixed parameters are zero."""
        th = np.zeros(13)
        for k, name in enumerate(self.names):
            v = z[k]
            if name in _IDENTITY:
                th[_INDEX[name]] = v
            elif name in _LOGIT:
                th[_INDEX[name]] = 0.5 * (1.0 + np.tanh(0.5 * v))
            elif name == "mu":
                th[_INDEX[name]] = self.q_min - np.exp(v)
            else:
                th[_INDEX[name]] = np.exp(v)
        return th

    def from_z(self, z: np.ndarray) -> ParamVector:
        return ParamVector.from_array(self.to_array(np.asarray(z, dtype=float)))

    @classmethod
    def for_series(cls, series, spec: ModelSpec | str = ModelSpec.ACAF_FULL) -> "ParamTransform":
        return cls(float(np.min(_as_values(series))), ModelSpec.parse(spec))


def per_obs_loglik(
    theta: ParamVector,
    series: MaximaSeries | np.ndarray,
    init: LatentState | None = None,
    spec: ModelSpec | str = ModelSpec.ACAF_FULL,
) -> np.ndarray:
    """Conditional log-density of each observation along the filtered path.

    Observations at or below ``mu`` give ``-inf``.
    """
    spec = ModelSpec.parse(spec)
    init = init_state(theta) if init is None else init
    return _kernels.loglik_terms(theta.to_array(), _as_values(series), *init.logs(), spec.two_branch)


def loglik(theta: ParamVector, series, spec: ModelSpec | str = ModelSpec.ACAF_FULL) -> float:
    """Summed log-likelihood started from :func:`init_state`."""
    th = theta.to_array()
    return float(_kernels.loglik_sum(th, _as_values(series), *_init_logs(th), ModelSpec.parse(spec).two_branch))


def _nll_array(th: np.ndarray, q: np.ndarray, two_branch: bool, init_logs=None) -> float:
    start = _init_logs(th) if init_logs is None else init_logs
    with np.errstate(all="ignore"):
        val = -_kernels.loglik_sum(th, q, *start, two_branch)
    return val if np.isfinite(val) else NLL_PENALTY


def nll(
    z: np.ndarray,
    series,
    transform: ParamTransform | None = None,
    init: LatentState | None = None,
) -> float:
    """Negative summed log-likelihood at unconstrained point ``z``.

    ``transform`` defaults to the full model on ``series``. The filter starts
    from ``init`` when given and from the fixed point of ``theta(z)``
    otherwise. Numerical overflow in the recursion is reported as
    :data:`NLL_PENALTY`.
    """
    q = _as_values(series)
    transform = ParamTransform(float(q.min())) if transform is None else transform
    logs = None if init is None else init.logs()
    return _nll_array(transform.to_array(np.asarray(z, dtype=float)), q, transform.spec.two_branch, logs)


def _fd_steps(th: np.ndarray, idx: np.ndarray, q_min: float, rel: float) -> np.ndarray:
    h = rel * np.maximum(1.0, np.abs(th[idx]))
    for k, i in enumerate(idx):
        name = PARAM_NAMES[i]
        if name == "mu":
            room = q_min - th[i]
        elif name in _LOGIT:
            room = min(th[i], 1.0 - th[i])
        elif name in _IDENTITY:
            continue
        else:
            room = th[i]
        # Keep both perturbed points strictly feasible.
        while h[k] >= 0.5 * room and h[k] > 0:
            h[k] *= 0.5
    return h


def score_matrix(
    theta: ParamVector,
    series,
    spec: ModelSpec | str = ModelSpec.ACAF_FULL,
    rel_step: float = 1e-5,
) -> np.ndarray:
    """Per-observation scores by central differences, shape ``(n, k)``.

    Columns follow ``spec.free``. Each perturbed parameter is re-filtered from
    its own fixed-point initial state, so the columns sum to the gradient of
    the objective minimised by the estimator.
    """
    spec = ModelSpec.parse(spec)
    q = _as_values(series)
    th = theta.to_array()
    if not th[12] < q.min():
        raise ValueError("score_matrix needs mu strictly below the sample minimum")
    idx = np.array([_INDEX[n] for n in spec.free])
    h = _fd_steps(th, idx, float(q.min()), rel_step)
    out = np.empty((q.size, idx.size))
    for k, i in enumerate(idx):
        up, dn = th.copy(), th.copy()
        up[i] += h[k]
        dn[i] -= h[k]
        lu = _kernels.loglik_terms(up, q, *_init_logs(up), spec.two_branch)
        ld = _kernels.loglik_terms(dn, q, *_init_logs(dn), spec.two_branch)
        out[:, k] = (lu - ld) / (2.0 * h[k])
    return out
