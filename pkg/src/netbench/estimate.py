"""
Decay fitting, confidence intervals and the sampling-cost statistics of the
benchmarking protocol.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.optimize import least_squares

from .channels import average_to_depolarizing, depolarizing_to_average
from .dataset import DecayDataset, FlipMode, ShotModel
from .errors import InsufficientDataError, InvalidParameterError, NoSignalError
from .protocol import split_shots

logger = logging.getLogger(__name__)

F_MIN = 1e-12
NO_SIGNAL_ATOL = 1e-12
FIT_TOL = 1e-14
MAX_NFEV = 200
MIN_BOOTSTRAP_RESAMPLES = 200
MIN_SEQUENCES_FOR_BOOTSTRAP = 5
# Flip term (p_plus + p_minus)^2 / 8 when the branch probabilities sum to one;
# also the default per-sample variance of the Fisher curves.
V_DIFF_BOUND = 1.0 / 8.0
# Share of the flip term that reaches the sampled spread, per flip mode.
FLIP_WEIGHTS = {FlipMode.SEQUENCE: 2.0, FlipMode.SHOT: 0.0}

__all__ = [
    "FitResult",
    "BootstrapResult",
    "VarianceComponents",
    "StatReport",
    "fit_decay",
    "fit_decay_data",
    "bootstrap_ci",
    "depolarizing_to_average",
    "average_to_depolarizing",
    "symmetric_link_fidelity",
    "fisher_information",
    "fisher_information_per_cost",
    "optimal_bounce_count",
    "crb_cost_bound",
    "crb_variance_floor",
    "variance_decomposition",
    "statistics_report",
    "fit_log_linear",
]


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of b_m = A f^m."""

    A: float
    f: float
    ci_A: Tuple[float, float]
    ci_f: Tuple[float, float]
    residuals: Tuple[float, ...]
    method: str
    stderr_A: float
    stderr_f: float
    covariance: Tuple[Tuple[float, float], Tuple[float, float]]
    dof: int
    m_values: Tuple[int, ...]
    nfev: int = 0
    converged: bool = True
    ci_method: str = "student-t"
    level: float = 0.95

    def average_fidelity(self, d: int = 2) -> float:
        return depolarizing_to_average(self.f, d)

    def with_intervals(
        self, ci_A: Tuple[float, float], ci_f: Tuple[float, float], ci_method: str
    ) -> "FitResult":
        return replace(self, ci_A=tuple(ci_A), ci_f=tuple(ci_f), ci_method=ci_method)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["ci_A"] = list(self.ci_A)
        data["ci_f"] = list(self.ci_f)
        data["residuals"] = list(self.residuals)
        data["covariance"] = [list(row) for row in self.covariance]
        data["m_values"] = list(self.m_values)
        return data


def _initial_guess(m: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Log-linear regression over the positive means."""
    positive = y > 0
    if np.count_nonzero(positive) >= 2 and len(set(m[positive])) >= 2:
        slope, intercept = np.polyfit(m[positive], np.log(y[positive]), 1)
        f0 = float(np.clip(np.exp(slope), 1e-6, 1.0))
        return float(np.exp(intercept)), f0
    f0 = 0.9
    index = int(np.argmax(y))
    return float(y[index] / f0 ** m[index]), f0


def _least_squares_fit(
    m: np.ndarray,
    y: np.ndarray,
    sigma: Optional[np.ndarray],
    p0: Tuple[float, float],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Any]:
    """
    Returns:
        (params, covariance, residuals, scipy result)
    """
    weights = np.ones_like(y) if sigma is None else 1.0 / sigma

    def residual(p):
        return (p[0] * np.power(p[1], m) - y) * weights

    def jacobian(p):
        jac = np.empty((m.size, 2))
        jac[:, 0] = np.power(p[1], m)
        jac[:, 1] = p[0] * m * np.power(p[1], np.maximum(m - 1, 0))
        return jac * weights[:, None]

    start = np.array([p0[0], min(max(p0[1], F_MIN), 1.0)])
    result = least_squares(
        residual,
        start,
        jac=jacobian,
        bounds=([-np.inf, F_MIN], [np.inf, 1.0]),
        method="trf",
        ftol=FIT_TOL,
        xtol=FIT_TOL,
        gtol=FIT_TOL,
        max_nfev=MAX_NFEV,
    )
    dof = m.size - 2
    ssr = float(np.sum(result.fun**2))
    covariance = np.linalg.pinv(result.jac.T @ result.jac) * (ssr / dof)
    raw_residuals = y - result.x[0] * np.power(result.x[1], m)
    return result.x, covariance, raw_residuals, result


def fit_decay_data(
    m_values: Sequence[int],
    means: Sequence[float],
    sigma: Optional[Sequence[float]] = None,
    level: float = 0.95,
) -> FitResult:
    """
    Fit b_m = A f^m by bounded nonlinear least squares.

    Args:
        m_values: Bounce counts
        means: Mean outcome per bounce count
        sigma: Optional standard errors used as inverse weights
        level: Confidence level of the Student-t intervals

    Returns:
        FitResult with f constrained to (0, 1]
    """
    m = np.asarray(m_values, dtype=float)
    y = np.asarray(means, dtype=float)
    if m.shape != y.shape:
        raise InvalidParameterError(f"{m.size} bounce counts but {y.size} means")
    if len(set(m.tolist())) < 3:
        raise InsufficientDataError(
            f"a decay fit needs at least 3 distinct bounce counts, got {sorted(set(m.tolist()))}"
        )
    if not np.any(y > NO_SIGNAL_ATOL):
        raise NoSignalError("no positive mean outcome: the decay carries no signal")
    weights = None
    method = "least_squares"
    if sigma is not None:
        weights = np.asarray(sigma, dtype=float)
        if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
            logger.warning("Non-positive standard errors; falling back to an unweighted fit")
            weights = None
        else:
            method = "weighted_least_squares"

    params, covariance, residuals, result = _least_squares_fit(m, y, weights, _initial_guess(m, y))
    if result.status <= 0:
        logger.warning(f"Decay fit stopped without converging: {result.message}")
    logger.debug(
        f"Decay fit: nfev={result.nfev}, gradient norm={np.max(np.abs(result.grad)):.3e}"
    )

    dof = m.size - 2
    stderr = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    t_value = float(stats.t.ppf(0.5 + level / 2, dof))
    A, f = float(params[0]), float(params[1])
    return FitResult(
        A=A,
        f=f,
        ci_A=(A - t_value * stderr[0], A + t_value * stderr[0]),
        ci_f=(f - t_value * stderr[1], f + t_value * stderr[1]),
        residuals=tuple(float(r) for r in residuals),
        method=method,
        stderr_A=float(stderr[0]),
        stderr_f=float(stderr[1]),
        covariance=tuple(tuple(float(c) for c in row) for row in covariance),
        dof=dof,
        m_values=tuple(int(v) for v in m_values),
        nfev=int(result.nfev),
        converged=bool(result.status > 0),
        level=level,
    )


def fit_decay(dataset: DecayDataset, weighted: bool = False, level: float = 0.95) -> FitResult:
    """Fit the per-m means of a dataset; see ``fit_decay_data``."""
    sigma = dataset.standard_errors if weighted else None
    return fit_decay_data(dataset.m_values, dataset.means, sigma=sigma, level=level)


@dataclass(frozen=True)
class BootstrapResult:
    """Studentized bootstrap intervals."""

    ci_A: Tuple[float, float]
    ci_f: Tuple[float, float]
    resamples: int
    failed: int
    seed: int
    level: float = 0.95

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ci_A": list(self.ci_A),
            "ci_f": list(self.ci_f),
            "resamples": self.resamples,
            "failed": self.failed,
            "seed": self.seed,
            "level": self.level,
        }


def _fit_resamples(
    m: np.ndarray, rows: np.ndarray, p0: Tuple[float, float]
) -> List[Optional[Tuple[float, float, float, float]]]:
    """(A, f, stderr_A, stderr_f) for each row of resampled means."""
    out: List[Optional[Tuple[float, float, float, float]]] = []
    for y in rows:
        try:
            params, covariance, _, _ = _least_squares_fit(m, y, None, p0)
        except (ValueError, np.linalg.LinAlgError):
            out.append(None)
            continue
        se = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
        out.append((float(params[0]), float(params[1]), float(se[0]), float(se[1])))
    return out


def _studentized_interval(
    estimate: float, stderr: float, boot: np.ndarray, boot_se: np.ndarray, level: float
) -> Tuple[float, float]:
    scale = max(np.max(np.abs(boot_se)), stderr, 1.0)
    degenerate = boot_se <= 1e-15 * scale
    t_stats = np.where(degenerate, 0.0, (boot - estimate) / np.where(degenerate, 1.0, boot_se))
    lower_q, upper_q = np.quantile(t_stats, [0.5 - level / 2, 0.5 + level / 2])
    return estimate - upper_q * stderr, estimate - lower_q * stderr


def bootstrap_ci(
    dataset: DecayDataset,
    fit: FitResult,
    resamples: int = 1000,
    seed: int = 0,
    level: float = 0.95,
    jobs: int = 1,
) -> BootstrapResult:
    """
    Bootstrap-t intervals for A and f.

    Sequences are resampled with replacement within each m; every resample
    is refit and studentized with its own standard errors.

    Args:
        dataset: Dataset the fit came from
        fit: Point estimate and standard errors
        resamples: Number of bootstrap resamples (at least 200)
        seed: Seed of the resampling
        level: Confidence level
        jobs: Worker processes for the refits

    Returns:
        BootstrapResult
    """
    if resamples < MIN_BOOTSTRAP_RESAMPLES:
        raise InvalidParameterError(
            f"bootstrap needs at least {MIN_BOOTSTRAP_RESAMPLES} resamples, got {resamples}"
        )
    by_m = dataset.values_by_m()
    short = {m: len(by_m[m]) for m in dataset.m_values if len(by_m[m]) < MIN_SEQUENCES_FOR_BOOTSTRAP}
    if short:
        raise InsufficientDataError(
            f"bootstrap needs at least {MIN_SEQUENCES_FOR_BOOTSTRAP} sequences per m, got {short}"
        )

    generators = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(resamples)]
    rows = np.empty((resamples, len(dataset.m_values)))
    for r, rng in enumerate(generators):
        for j, m in enumerate(dataset.m_values):
            values = by_m[m]
            rows[r, j] = values[rng.integers(0, len(values), size=len(values))].mean()

    m = np.asarray(dataset.m_values, dtype=float)
    p0 = (fit.A, fit.f)
    if jobs > 1:
        chunks = np.array_split(rows, jobs)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_fit_resamples, [m] * len(chunks), chunks, [p0] * len(chunks)))
        fits = [item for part in parts for item in part]
    else:
        fits = _fit_resamples(m, rows, p0)

    good = np.array([item for item in fits if item is not None])
    failed = resamples - len(good)
    if failed:
        logger.warning(f"{failed} of {resamples} bootstrap refits failed and were dropped")
    if len(good) < MIN_BOOTSTRAP_RESAMPLES // 2:
        raise InsufficientDataError(f"only {len(good)} bootstrap refits succeeded")

    ci_A = _studentized_interval(fit.A, fit.stderr_A, good[:, 0], good[:, 2], level)
    ci_f = _studentized_interval(fit.f, fit.stderr_f, good[:, 1], good[:, 3], level)
    return BootstrapResult(
        ci_A=ci_A, ci_f=ci_f, resamples=resamples, failed=failed, seed=seed, level=level
    )


def symmetric_link_fidelity(f_net: float, d: int = 2) -> Tuple[float, float]:
    """
    Per-direction fidelities assuming both link directions are equally noisy.

    Returns:
        (f_link, F_avg) with f_link = sqrt(f_net)
    """
    if not 0.0 < f_net <= 1.0:
        raise InvalidParameterError(f"network fidelity {f_net} outside (0, 1]")
    f_link = math.sqrt(f_net)
    return f_link, depolarizing_to_average(f_link, d)


def _check_decay(f: float, allow_one: bool = True):
    upper_ok = f <= 1.0 if allow_one else f < 1.0
    if not (f > 0.0 and upper_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise InvalidParameterError(f"decay parameter {f} outside {bound}")


def fisher_information(f: float, m, A: float, V: float = V_DIFF_BOUND):
    """
    Fisher information about f in one sequence mean at bounce count m,
    A^2 f^(2m-2) m^2 / V. Accepts scalar or array m.
    """
    _check_decay(f)
    if V <= 0:
        raise InvalidParameterError(f"variance {V} must be positive")
    m_arr = np.asarray(m, dtype=float)
    if np.any(m_arr < 1):
        raise InvalidParameterError("bounce counts must be at least 1")
    value = A**2 * np.power(f, 2 * m_arr - 2) * m_arr**2 / V
    return float(value) if np.ndim(value) == 0 else value


def fisher_information_per_cost(f: float, m, A: float, V: float = V_DIFF_BOUND):
    """Fisher information per transmission (cost proportional to m)."""
    return fisher_information(f, m, A, V) / np.asarray(m, dtype=float)


def optimal_bounce_count(f: float) -> float:
    """Maximizer -1/(2 ln f) of the per-cost Fisher information."""
    _check_decay(f, allow_one=False)
    return -1.0 / (2.0 * math.log(f))


def crb_cost_bound(f: float, A: float, V: float = V_DIFF_BOUND) -> float:
    """Largest per-cost Fisher information, attained at the optimal bounce count."""
    if V <= 0:
        raise InvalidParameterError(f"variance {V} must be positive")
    m_star = optimal_bounce_count(f)
    return A**2 * m_star * f ** (2 * m_star - 2) / V


def crb_variance_floor(f: float, A: float, V: float = V_DIFF_BOUND) -> float:
    """Cramér-Rao lower bound on the variance of f per unit cost."""
    return 1.0 / crb_cost_bound(f, A, V)


@dataclass(frozen=True)
class VarianceComponents:
    """
    Law-of-total-variance split of the per-sequence values at each m.

    ``v_gate`` comes from the random gates and ``v_meas`` from finite shots.
    ``v_diff`` is the flip term (p_plus + p_minus)^2 / 8 of the ending-gate
    choice; ``flip_weight`` times it is what the flip adds to the sampled
    spread (2 with one coin per sequence, 0 with the shot split).
    """

    m_values: Tuple[int, ...]
    v_gate: Tuple[float, ...]
    v_meas: Tuple[float, ...]
    v_diff: Tuple[float, ...]
    v_total: Tuple[float, ...]
    flip_weight: float = 0.0

    @property
    def v_sum(self) -> Tuple[float, ...]:
        return tuple(
            g + s + self.flip_weight * d
            for g, s, d in zip(self.v_gate, self.v_meas, self.v_diff)
        )

    def to_dict(self) -> Dict[str, Any]:
        data = {key: list(value) for key, value in asdict(self).items() if key != "flip_weight"}
        data["flip_weight"] = self.flip_weight
        return data


def _shot_variance(p: np.ndarray, shots: int, model: ShotModel) -> np.ndarray:
    if model is ShotModel.EXACT:
        return np.zeros_like(p)
    return p * (1.0 - p) / shots


def variance_decomposition(dataset: DecayDataset) -> VarianceComponents:
    """
    Estimate the variance components of each m from the recorded exact
    branch probabilities.
    """
    frame = dataset.frame()
    if frame[["p_plus", "p_minus"]].isna().any().any():
        raise InsufficientDataError("dataset lacks the exact branch probabilities")
    v_gate, v_meas, v_diff, v_total = [], [], [], []
    for m in dataset.m_values:
        rows = frame[frame["m"] == m]
        if len(rows) < 2:
            raise InsufficientDataError(f"m={m} needs at least 2 sequences, has {len(rows)}")
        p_plus = rows["p_plus"].to_numpy(dtype=float)
        p_minus = rows["p_minus"].to_numpy(dtype=float)
        v_gate.append(float(np.var(0.5 * (p_plus - p_minus), ddof=1)))
        v_diff.append(float(np.mean((p_plus + p_minus) ** 2 / 8.0)))
        if dataset.flip_mode is FlipMode.SEQUENCE:
            shot_var = 0.5 * (
                _shot_variance(p_plus, dataset.shots, dataset.shot_model)
                + _shot_variance(p_minus, dataset.shots, dataset.shot_model)
            )
        else:
            plain, flipped = split_shots(dataset.shots)
            shot_var = 0.25 * (
                _shot_variance(p_plus, plain, dataset.shot_model)
                + _shot_variance(p_minus, flipped, dataset.shot_model)
            )
        v_meas.append(float(np.mean(shot_var)))
        v_total.append(float(np.var(rows["b_value"].to_numpy(dtype=float), ddof=1)))
    return VarianceComponents(
        m_values=tuple(dataset.m_values),
        v_gate=tuple(v_gate),
        v_meas=tuple(v_meas),
        v_diff=tuple(v_diff),
        v_total=tuple(v_total),
        flip_weight=FLIP_WEIGHTS[dataset.flip_mode],
    )


@dataclass(frozen=True)
class StatReport:
    """Sampling-cost analysis for a decay parameter guess."""

    f: float
    A: float
    V: float
    m_grid: Tuple[int, ...]
    fisher_per_sample: Tuple[float, ...]
    fisher_per_cost: Tuple[float, ...]
    m_star: int
    m_star_continuous: float
    crb_variance_lower_bound: float
    variance_components: Optional[VarianceComponents] = None

    def rows(self) -> List[Dict[str, float]]:
        return [
            {"m": m, "fisher_per_sample": s, "fisher_per_cost": c}
            for m, s, c in zip(self.m_grid, self.fisher_per_sample, self.fisher_per_cost)
        ]

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "f": self.f,
            "A": self.A,
            "V": self.V,
            "m_star": self.m_star,
            "m_star_continuous": self.m_star_continuous,
            "crb_variance_lower_bound": self.crb_variance_lower_bound,
            "curve": self.rows(),
        }
        if self.variance_components is not None:
            data["variance_components"] = self.variance_components.to_dict()
        return data


def statistics_report(
    f: float,
    A: float = 0.5,
    m_grid: Optional[Sequence[int]] = None,
    V: float = V_DIFF_BOUND,
    dataset: Optional[DecayDataset] = None,
) -> StatReport:
    """
    Fisher curves, optimal bounce count and variance floor for a guess of f.

    The default grid runs from 1 to max(20, 4 m*), capped at 10000.
    """
    m_continuous = optimal_bounce_count(f)
    if m_grid is None:
        m_grid = range(1, int(min(max(20, math.ceil(4 * m_continuous)), 10_000)) + 1)
    grid = np.asarray(list(m_grid), dtype=int)
    if grid.size == 0 or grid.min() < 1:
        raise InvalidParameterError(f"bounce counts must be at least 1, got {grid.tolist()}")
    per_sample = np.atleast_1d(fisher_information(f, grid, A, V))
    per_cost = np.atleast_1d(fisher_information_per_cost(f, grid, A, V))
    components = variance_decomposition(dataset) if dataset is not None else None
    return StatReport(
        f=f,
        A=A,
        V=V,
        m_grid=tuple(int(m) for m in grid),
        fisher_per_sample=tuple(float(v) for v in per_sample),
        fisher_per_cost=tuple(float(v) for v in per_cost),
        m_star=int(grid[int(np.argmax(per_cost))]),
        m_star_continuous=m_continuous,
        crb_variance_lower_bound=crb_variance_floor(f, A, V),
        variance_components=components,
    )


def fit_log_linear(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """
    Straight-line fit of log(y) against x.

    Returns:
        (slope, intercept, R^2)
    """
    x_arr = np.asarray(x, dtype=float)
    log_y = np.log(np.asarray(y, dtype=float))
    if x_arr.size < 2:
        raise InsufficientDataError("a line needs at least two points")
    result = stats.linregress(x_arr, log_y)
    return float(result.slope), float(result.intercept), float(result.rvalue**2)
