"""Monte Carlo check of the maxima-of-maxima limit in a one-factor model.

Each replication draws a panel

    X_i = beta_i Z + sigma_i max(eps1_i, eps2_i),   i = 1..p,

with ``Z ~ N(0, 1)``, ``beta_i ~ U(-2, 2)``, ``sigma_i`` from an equal mixture
of two uniforms, and heavy-tailed noises. ``Q = max_i X_i`` is scaled by
``a_p = (sum sigma_i**alpha)**(1/alpha)`` for the dominant (smaller) tail index
and compared with its Frechet-type limit.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "NoiseLaw",
    "FactorLabConfig",
    "Case",
    "LimitCase",
    "norming_constant",
    "limit_cdf",
    "simulate_factor_maxima",
    "normalized_maxima",
    "ks_distance",
    "convergence_experiment",
    "ConvergenceRow",
    "PAPER_PAIRINGS",
]


@dataclass(frozen=True)
class NoiseLaw:
    """Heavy-tailed noise: Student-t with ``df = index`` or Pareto(scale, index)."""

    kind: str
    index: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("t", "pareto"):
            raise ValueError(f"unknown noise law {self.kind!r}")
        if not self.index > 0:
            raise ValueError("tail index must be positive")
        if self.kind == "pareto" and not self.scale > 0:
            raise ValueError("Pareto scale must be positive")

    @property
    def tail_index(self) -> float:
        return float(self.index)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "t":
            return rng.standard_t(self.index, size)
        # Inverse CDF of F(x) = 1 - (scale/x)**index.
        return self.scale * (1.0 - rng.random(size)) ** (-1.0 / self.index)

    def label(self) -> str:
        if self.kind == "t":
            return f"t({self.index:g})"
        return f"Pareto({self.scale:g},{self.index:g})"

    @classmethod
    def parse(cls, text: str) -> "NoiseLaw":
        """``"t:3"`` or ``"pareto:1:3"`` (scale, index)."""
        parts = text.split(":")
        if parts[0] == "t" and len(parts) == 2:
            return cls("t", float(parts[1]))
        if parts[0] == "pareto" and len(parts) == 3:
            return cls("pareto", float(parts[2]), float(parts[1]))
        raise ValueError(f"cannot parse noise law {text!r}")


@dataclass(frozen=True)
class FactorLabConfig:
    noise1: NoiseLaw = NoiseLaw("t", 3.0)
    noise2: NoiseLaw = NoiseLaw("t", 5.0)
    p_grid: tuple[int, ...] = (100, 1000, 10000)
    reps: int = 1000
    coeff_range: tuple[float, float] = (-2.0, 2.0)
    vol_mixture: tuple[tuple[float, float], ...] = ((0.0, 0.09), (0.01, 0.08))
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.p_grid or min(self.p_grid) < 1:
            raise ValueError("p_grid needs positive panel sizes")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")

    @property
    def limit(self) -> "LimitCase":
        return LimitCase.from_indices(self.noise1.tail_index, self.noise2.tail_index)

    def to_dict(self) -> dict:
        return {
            "noise1": self.noise1.label(),
            "noise2": self.noise2.label(),
            "p_grid": list(self.p_grid),
            "reps": self.reps,
            "coeff_range": list(self.coeff_range),
            "vol_mixture": [list(c) for c in self.vol_mixture],
            "seed": self.seed,
        }


# The three pairings of the factor-model study.
PAPER_PAIRINGS = {
    "alpha1_less": (NoiseLaw("t", 3.0), NoiseLaw("t", 5.0)),
    "equal": (NoiseLaw("t", 3.0), NoiseLaw("pareto", 3.0, 1.0)),
    "alpha1_greater": (NoiseLaw("t", 3.0), NoiseLaw("t", 2.0)),
}


class Case(str, enum.Enum):
    ALPHA1_LESS = "alpha1_less"
    EQUAL = "equal"
    ALPHA1_GREATER = "alpha1_greater"


@dataclass(frozen=True)
class LimitCase:
    """Which index dominates the maximum, and the resulting limit law."""

    case: Case
    alpha1: float
    alpha2: float

    @classmethod
    def from_indices(cls, alpha1: float, alpha2: float) -> "LimitCase":
        if alpha1 < alpha2:
            case = Case.ALPHA1_LESS
        elif alpha1 > alpha2:
            case = Case.ALPHA1_GREATER
        else:
            case = Case.EQUAL
        return cls(case, float(alpha1), float(alpha2))

    @property
    def alpha(self) -> float:
        """Index used for the norming constant (the heavier tail)."""
        return min(self.alpha1, self.alpha2)


def norming_constant(vols, alpha: float) -> float:
    """``(sum vols**alpha)**(1/alpha)`` evaluated through log-sum-exp."""
    vols = np.asarray(vols, dtype=float)
    if vols.size == 0:
        raise ValueError("need at least one volatility")
    if np.any(vols <= 0) or not alpha > 0:
        raise ValueError("volatilities and alpha must be positive")
    return float(np.exp(logsumexp(alpha * np.log(vols)) / alpha))


def limit_cdf(case: LimitCase, x):
    """Limit law of the normalized maximum.

    ``exp(-x**-alpha)`` when one index dominates and ``exp(-2 x**-alpha)`` when
    the indices coincide (shared volatilities give equal norming constants).
    Zero for ``x <= 0``.
    """
    x = np.asarray(x, dtype=float)
    weight = 2.0 if case.case is Case.EQUAL else 1.0
    pos = x > 0
    with np.errstate(over="ignore"):
        val = np.exp(-weight * np.exp(-case.alpha * np.log(np.where(pos, x, 1.0))))
    out = np.where(pos, val, 0.0)
    return out if out.ndim else float(out)


def _draw_vols(config: FactorLabConfig, rng: np.random.Generator, p: int) -> np.ndarray:
    k = rng.integers(0, len(config.vol_mixture), p)
    lo = np.array([c[0] for c in config.vol_mixture])[k]
    hi = np.array([c[1] for c in config.vol_mixture])[k]
    vols = lo + (hi - lo) * rng.random(p)
    # U(0, .) can return exactly 0, which has no log.
    return np.where(vols > 0, vols, np.nextafter(0.0, 1.0))


def simulate_factor_maxima(
    config: FactorLabConfig,
    p: int,
    rng: np.random.Generator | int | None = None,
    *,
    loadings: np.ndarray | None = None,
    vols: np.ndarray | None = None,
    factor: float | None = None,
    noise: tuple[np.ndarray, np.ndarray] | None = None,
) -> float:
    """One normalized maximum ``max_i X_i / a_p`` (``b_p = 0``).

    Any of the panel ingredients can be supplied to pin a replication.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    lo, hi = config.coeff_range
    beta = rng.uniform(lo, hi, p) if loadings is None else np.asarray(loadings, dtype=float)
    sig = _draw_vols(config, rng, p) if vols is None else np.asarray(vols, dtype=float)
    z = rng.standard_normal() if factor is None else float(factor)
    if noise is None:
        e1 = config.noise1.sample(rng, p)
        e2 = config.noise2.sample(rng, p)
    else:
        e1, e2 = (np.asarray(e, dtype=float) for e in noise)
    q = float(np.max(beta * z + sig * np.maximum(e1, e2)))
    return q / norming_constant(sig, config.limit.alpha)


def _rep_rng(seed: int, p: int, rep: int) -> np.random.Generator:
    return np.random.default_rng([seed, p, rep])


def normalized_maxima(config: FactorLabConfig, p: int) -> np.ndarray:
    """``config.reps`` normalized maxima at panel size ``p``, one stream per replication."""
    return np.array(
        [simulate_factor_maxima(config, p, _rep_rng(config.seed, p, r)) for r in range(config.reps)]
    )


def ks_distance(sample, cdf) -> float:
    """Kolmogorov-Smirnov sup-distance between a sample and a continuous CDF."""
    x = np.sort(np.asarray(sample, dtype=float))
    m = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - f), np.max(f - (i - 1) / m)))


@dataclass(frozen=True)
class ConvergenceRow:
    p: int
    case: str
    reps: int
    ks: float
    passed: bool
    frac_nonpositive: float


def convergence_experiment(
    config: FactorLabConfig,
    threshold: float = 0.05,
    dump: str | Path | None = None,
) -> list[ConvergenceRow]:
    """KS distance to the limit law for every ``p`` in the grid.

    ``passed`` marks ``ks < threshold``. ``dump`` writes every normalized
    maximum as ``p,rep,value`` rows for external plotting.
    """
    limit = config.limit
    rows = []
    dumps = []
    for p in config.p_grid:
        sample = normalized_maxima(config, p)
        ks = ks_distance(sample, lambda x: limit_cdf(limit, x))
        rows.append(ConvergenceRow(int(p), limit.case.value, config.reps, ks, ks < threshold,
                                   float(np.mean(sample <= 0))))
        if dump is not None:
            dumps.extend((p, r, v) for r, v in enumerate(sample))
    if dump is not None:
        with open(dump, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(("p", "rep", "value"))
            w.writerows((p, r, f"{v:.15g}") for p, r, v in dumps)
    return rows


def write_table(rows: list[ConvergenceRow], path: str | Path, delimiter: str = ",") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(("p", "case", "reps", "ks", "pass", "frac_nonpositive"))
        for r in rows:
            w.writerow((r.p, r.case, r.reps, f"{r.ks:.15g}", int(r.passed), f"{r.frac_nonpositive:.15g}"))
