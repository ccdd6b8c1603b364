"""Monte Carlo harness: schedules, per-cell summaries, oracle gating, rate fits.

A Schedule is a sequence of (n, delta) cells encoding an asymptotic regime;
`run_cell` simulates one cell and returns an McSummary holding the estimator's
error distribution, its distance to N(0, 1), and a list of oracle
cross-checks; `run_schedule` adds log-log rate fits of W1 against the rate
bound for the chosen estimator.  `coupling_check` and `consistency_check`
exercise the pathwise coupling and the mean-absolute-error decay.

Determinism contract: every result is a pure function of (arguments,
master_seed).  Path i of a cell draws from the counter-based stream
(master_seed, i), blocks of paths are filled into disjoint slices of
preallocated arrays, and reductions run in index order, so results are
bit-identical across runs and across worker counts.  OU_BENCH_THREADS caps
the worker pool without affecting values.  Cells share streams (common random
numbers): comparisons across cells and between estimators on the same cell
reuse the same paths, which tightens monotonicity comparisons.

Oracle gating: rows marked gated compare Monte Carlo moments against exact
closed forms (and the pathwise decomposition identity) and must pass at 4
standard errors; `cmd_verify` turns them into an exit code.  Rows for the
first-order values `k3_lambda_is_zero` and `k4_lambda` are reported but not
gated: at desk scale the terms those values drop are dominant, the empirical
cumulants match the exact oracles instead, and gating on them would fail every
run.  The report keeps both so the gap is visible, not hidden.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import oracles
from .errors import ExcessiveDegeneracy, InsufficientCells, NonPositiveValue
from .estimators import EPS_DEN, Estimator, IndexConvention
from .metrics import DistanceReport, SampleCumulants, distance_report, sample_cumulants
from .ou_core import OuParams, _ar1_scan, path_rng, transition_coefficients

__all__ = [
    "DECOMP_TOL",
    "DEGENERACY_ABORT_FRACTION",
    "GATE_SE",
    "ConsistencyReport",
    "ConsistencyRow",
    "CouplingReport",
    "CouplingRow",
    "McSummary",
    "OracleCheck",
    "RateFit",
    "RateResponse",
    "Schedule",
    "ScheduleCell",
    "ScheduleResult",
    "bound_terms",
    "clear_caches",
    "consistency_check",
    "coupling_check",
    "fit_rate",
    "preset_schedule",
    "preset_names",
    "run_cell",
    "run_schedule",
]

# Gating tolerances and the degeneracy abort threshold.
GATE_SE = 4.0
DECOMP_TOL = 1e-10
DEGENERACY_ABORT_FRACTION = 1e-3

# Dense-oracle rows are included only when the cell is small enough for the
# cubic-cost contractions.
_DENSE_ORACLE_MAX_N = 512


@dataclass(frozen=True)
class ScheduleCell:
    """One (n, delta) cell with its regime control quantities."""

    n: int
    delta: float

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"schedule cells need n >= 2, got {self.n}")
        if not (math.isfinite(self.delta) and self.delta > 0.0):
            raise ValueError(f"schedule cells need delta > 0, got {self.delta!r}")

    @property
    def horizon(self) -> float:
        return self.n * self.delta

    @property
    def delta_sq(self) -> float:
        return self.delta**2

    @property
    def inv_sqrt_n_delta(self) -> float:
        return 1.0 / math.sqrt(self.n * self.delta)

    @property
    def sqrt_n_delta_cubed(self) -> float:
        return math.sqrt(self.n * self.delta**3)

    def n_delta_eta(self, eta: float) -> float:
        """Control quantity n * delta^eta for the strong-consistency regime."""
        if not 1.0 < eta < 2.0:
            raise ValueError(f"eta must lie in (1, 2), got {eta}")
        return self.n * self.delta**eta

    def params(self, theta: float) -> OuParams:
        return OuParams(theta=theta, delta=self.delta, n=self.n)


@dataclass(frozen=True)
class Schedule:
    """Named sequence of cells; clt_valid asserts the joint regime.

    A CLT-valid schedule must have delta strictly decreasing and horizon
    T = n * delta strictly increasing across cells; marking any other shape
    CLT-valid is rejected at construction.
    """

    name: str
    cells: tuple[ScheduleCell, ...]
    clt_valid: bool = False

    def __post_init__(self) -> None:
        if not self.cells:
            raise ValueError("schedule needs at least one cell")
        object.__setattr__(self, "cells", tuple(self.cells))
        if self.clt_valid and not (self.delta_decreasing and self.horizon_increasing):
            raise ValueError(
                f"schedule {self.name!r} marked CLT-valid but delta is not strictly "
                "decreasing with strictly increasing horizon"
            )

    @property
    def delta_decreasing(self) -> bool:
        deltas = [c.delta for c in self.cells]
        return all(b < a for a, b in zip(deltas, deltas[1:]))

    @property
    def horizon_increasing(self) -> bool:
        horizons = [c.horizon for c in self.cells]
        return all(b > a for a, b in zip(horizons, horizons[1:]))


def _gamma_schedule(name: str, gamma: float, exponents: range) -> Schedule:
    cells = tuple(
        ScheduleCell(n=2**k, delta=float(2**k) ** -gamma) for k in exponents
    )
    return Schedule(name=name, cells=cells, clt_valid=True)


def _preset_map() -> dict[str, Schedule]:
    return {
        "amce-gamma-half": _gamma_schedule("amce-gamma-half", 0.5, range(8, 15)),
        "amle-gamma-3q": _gamma_schedule("amle-gamma-3q", 0.75, range(8, 15)),
        "coupling-sweep": Schedule(
            name="coupling-sweep",
            cells=tuple(ScheduleCell(n=2**k, delta=0.05) for k in (8, 10, 12)),
            clt_valid=False,
        ),
        "negative-control-fixed-T": Schedule(
            name="negative-control-fixed-T",
            cells=tuple(ScheduleCell(n=2**k, delta=16.0 / 2**k) for k in range(8, 15)),
            clt_valid=False,
        ),
    }


def preset_names() -> tuple[str, ...]:
    return tuple(_preset_map())


def preset_schedule(name: str) -> Schedule:
    presets = _preset_map()
    if name not in presets:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(sorted(presets))}"
        )
    return presets[name]


def bound_terms(cell: ScheduleCell, estimator: Estimator) -> tuple[float, float]:
    """The two terms of the estimator's rate bound at this cell (constant 1)."""
    if estimator is Estimator.AMCE:
        return cell.delta_sq, cell.inv_sqrt_n_delta
    return cell.inv_sqrt_n_delta, cell.sqrt_n_delta_cubed


@dataclass(frozen=True)
class OracleCheck:
    """One exact-vs-empirical comparison.

    Gated checks must pass (|empirical - exact| <= GATE_SE * standard_error,
    or the stated absolute tolerance for the decomposition row); ungated rows
    are informational and their pass flag records the honest outcome.
    """

    name: str
    exact: float
    empirical: float
    standard_error: float
    passed: bool
    gated: bool
    note: str = ""


@dataclass(frozen=True)
class McSummary:
    """Monte Carlo summary of one estimator on one cell."""

    cell: tuple[int, float]
    estimator: Estimator
    replications: int
    theta: float
    convention: IndexConvention
    distance: DistanceReport
    # None when fewer than 4 usable replications (jackknife needs 4).
    cumulants: SampleCumulants | None
    mean_error: float
    rmse: float
    mae: float
    degenerate_count: int
    oracle_checks: tuple[OracleCheck, ...]

    @property
    def gated_pass(self) -> bool:
        return all(c.passed for c in self.oracle_checks if c.gated)

    @property
    def failed_gates(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.oracle_checks if c.gated and not c.passed)


class RateResponse(enum.Enum):
    W1_AMCE = "w1_amce"
    W1_AMLE = "w1_amle"
    VAR_GAP_FN_Z = "var_gap_fn_z"


@dataclass(frozen=True)
class RateFit:
    """Log-log least-squares fit of a distance against a bound expression.

    Slopes are reported, never asserted against thresholds by this type; the
    unknown constant in the bound makes absolute levels meaningless.
    """

    schedule: str
    response: RateResponse | None
    predictor: str
    slope: float
    intercept: float
    r2: float
    n_cells: int


@dataclass(frozen=True)
class ScheduleResult:
    schedule: Schedule
    estimator: Estimator
    summaries: tuple[McSummary, ...]
    bound_fit: RateFit | None
    dominant_fit: RateFit | None


@dataclass(frozen=True)
class _CellStats:
    """Per-path scalar statistics of one simulated cell, all shape (reps,).

    Arrays are cached and shared between calls; treat them as read-only.
    """

    f_body: np.ndarray
    f_abs: np.ndarray
    fz_body: np.ndarray
    fz_abs: np.ndarray
    amle_num: np.ndarray
    s_n: np.ndarray
    lam: np.ndarray


def _worker_count() -> int:
    raw = os.environ.get("OU_BENCH_THREADS")
    cores = os.cpu_count() or 1
    if raw is None:
        return min(cores, 8)
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ValueError(f"OU_BENCH_THREADS must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise ValueError(f"OU_BENCH_THREADS must be >= 1, got {workers}")
    return workers


def _fill_block(
    lo: int,
    hi: int,
    params: OuParams,
    master_seed: int,
    out: _CellStats,
) -> None:
    """Simulate paths [lo, hi) and write their statistics into out[lo:hi].

    Path i draws from stream (master_seed, i) in the stationary layout: Z_0
    first, then the n innovations.  X and Z are built from the same
    innovations, so the pair is the exact coupling.
    """
    theta, delta, n = params.theta, params.delta, params.n
    a, s2 = transition_coefficients(theta, delta)
    scale = math.sqrt(s2)
    sd0 = math.sqrt(1.0 / (2.0 * theta))
    block = hi - lo
    eta = np.empty((block, n))
    z0 = np.empty(block)
    for k in range(block):
        rng = path_rng(master_seed, stream=lo + k)
        z0[k] = rng.standard_normal() * sd0
        eta[k] = rng.standard_normal(n)
    x = _ar1_scan(eta, a, scale, 0.0)
    decay = np.exp(-theta * delta * np.arange(n + 1))
    z = x + z0[:, None] * decay[None, :]

    x_head = x[:, :n]
    sum_sq_head = np.einsum("ij,ij->i", x_head, x_head)
    out.f_body[lo:hi] = sum_sq_head / n
    x_tail = x[:, 1:]
    out.f_abs[lo:hi] = np.einsum("ij,ij->i", x_tail, x_tail) / n
    z_head = z[:, :n]
    out.fz_body[lo:hi] = np.einsum("ij,ij->i", z_head, z_head) / n
    z_tail = z[:, 1:]
    out.fz_abs[lo:hi] = np.einsum("ij,ij->i", z_tail, z_tail) / n
    increments = x_tail - x_head
    out.amle_num[lo:hi] = -np.einsum("ij,ij->i", x_head, increments)
    out.s_n[lo:hi] = delta * sum_sq_head
    out.lam[lo:hi] = scale * np.einsum("ij,ij->i", x_head, eta)


def _compute_cell_stats(params: OuParams, reps: int, master_seed: int) -> _CellStats:
    stats = _CellStats(
        f_body=np.empty(reps),
        f_abs=np.empty(reps),
        fz_body=np.empty(reps),
        fz_abs=np.empty(reps),
        amle_num=np.empty(reps),
        s_n=np.empty(reps),
        lam=np.empty(reps),
    )
    # Block size targets a few MB of innovations per task.
    block = max(64, min(reps, int(4_000_000 // max(params.n, 1)) or 1))
    ranges = [(lo, min(lo + block, reps)) for lo in range(0, reps, block)]
    workers = _worker_count()
    if workers == 1 or len(ranges) == 1:
        for lo, hi in ranges:
            _fill_block(lo, hi, params, master_seed, stats)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_fill_block, lo, hi, params, master_seed, stats)
                for lo, hi in ranges
            ]
            for future in futures:
                future.result()
    return stats


@lru_cache(maxsize=8)
def _cell_stats_cached(
    theta: float, delta: float, n: int, reps: int, master_seed: int
) -> _CellStats:
    return _compute_cell_stats(OuParams(theta=theta, delta=delta, n=n), reps, master_seed)


def clear_caches() -> None:
    """Drop cached cell statistics (tests use this around determinism checks)."""
    _cell_stats_cached.cache_clear()


def _se_check(name, exact, empirical, se, *, gated, note="", tol_se=GATE_SE):
    passed = abs(empirical - exact) <= tol_se * se
    return OracleCheck(
        name=name,
        exact=float(exact),
        empirical=float(empirical),
        standard_error=float(se),
        passed=bool(passed),
        gated=gated,
        note=note,
    )


def _oracle_checks(
    params: OuParams,
    convention: IndexConvention,
    stats: _CellStats,
    nerr_cumulants: SampleCumulants | None,
) -> tuple[OracleCheck, ...]:
    theta = params.theta
    horizon = params.horizon
    sqrt_t = math.sqrt(horizon)
    checks: list[OracleCheck] = []
    # Jackknife cumulants need 4 observations; below that only the raw second
    # moment and the pathwise decomposition are checked.
    enough = stats.lam.size >= 4

    fz = stats.fz_body if convention is IndexConvention.BODY else stats.fz_abs
    big_f = sqrt_t * (fz - 1.0 / (2.0 * theta))
    if enough:
        sc_f = sample_cumulants(big_f)
        checks.append(
            _se_check(
                "exact_var_fn_z",
                oracles.exact_var_fn_z(params),
                sc_f.var,
                sc_f.se_var,
                gated=True,
            )
        )
        if params.n <= _DENSE_ORACLE_MAX_N:
            checks.append(
                _se_check(
                    "k3_fn_z",
                    oracles.k3_fn_z(params),
                    sc_f.k3,
                    sc_f.se_k3,
                    gated=True,
                )
            )
            checks.append(
                _se_check(
                    "k4_fn_z_bound",
                    oracles.k4_fn_z_bound(params),
                    sc_f.k4,
                    sc_f.se_k4,
                    gated=True,
                    note="bound attained exactly for this kernel; checked as parity",
                )
            )

    lam_scaled = stats.lam / sqrt_t
    # exact_var_lambda is the raw second moment; E[Lambda_n] = 0 exactly.
    sq = lam_scaled**2
    emp_sq = float(np.mean(sq))
    se_sq = float(np.std(sq, ddof=1)) / math.sqrt(sq.size)
    checks.append(
        _se_check(
            "exact_var_lambda",
            oracles.exact_var_lambda(params),
            emp_sq,
            se_sq,
            gated=True,
        )
    )
    if enough:
        sc_l = sample_cumulants(lam_scaled)
        checks.append(
            _se_check(
                "exact_k3_lambda",
                oracles.exact_k3_lambda(params),
                sc_l.k3,
                sc_l.se_k3,
                gated=True,
            )
        )
        checks.append(
            _se_check(
                "exact_k4_lambda",
                oracles.exact_k4_lambda(params),
                sc_l.k4,
                sc_l.se_k4,
                gated=True,
            )
        )
        checks.append(
            _se_check(
                "k3_lambda_is_zero",
                oracles.k3_lambda_is_zero(params),
                sc_l.k3,
                sc_l.se_k3,
                gated=False,
                note="first-order value; dropped cross terms are O(1/sqrt(T)) and "
                "dominate at this scale, see exact_k3_lambda",
            )
        )
        checks.append(
            _se_check(
                "k4_lambda",
                oracles.k4_lambda(params),
                sc_l.k4,
                sc_l.se_k4,
                gated=False,
                note="first-order diagonal value; see exact_k4_lambda",
            )
        )

    # Pathwise decomposition: -theta_hat = (e^{-theta delta} - 1)/delta
    # + Lambda_n / S_n, checked on every non-degenerate path.
    a, _ = transition_coefficients(theta, params.delta)
    drift_term = (a - 1.0) / params.delta
    good = stats.s_n / horizon > EPS_DEN
    est = stats.amle_num[good] / stats.s_n[good]
    resid = np.abs(-est - (drift_term + stats.lam[good] / stats.s_n[good]))
    rel = resid / (1.0 + np.abs(est))
    worst = float(np.max(rel)) if rel.size else 0.0
    checks.append(
        OracleCheck(
            name="decomposition_identity",
            exact=0.0,
            empirical=worst,
            standard_error=0.0,
            passed=worst <= DECOMP_TOL,
            gated=True,
            note=f"max relative residual over paths, tolerance {DECOMP_TOL:g}",
        )
    )

    # Finite-size cumulant screen on the normalized errors, informational: the
    # third cumulant decays like the rate bound, not faster, so it sits many
    # standard errors from 0 at desk scale.
    if nerr_cumulants is not None:
        checks.append(
            _se_check(
                "screen_k3_normalized_errors",
                0.0,
                nerr_cumulants.k3,
                nerr_cumulants.se_k3,
                gated=False,
                note="finite-size cumulant; decays with the rate bound",
            )
        )
        checks.append(
            _se_check(
                "screen_k4_normalized_errors",
                0.0,
                nerr_cumulants.k4,
                nerr_cumulants.se_k4,
                gated=False,
                note="finite-size cumulant; decays with the rate bound",
            )
        )
    return tuple(checks)


def run_cell(
    params: OuParams,
    estimator: Estimator,
    replications: int,
    master_seed: int,
    *,
    convention: IndexConvention = IndexConvention.BODY,
    n_bootstrap: int = 200,
) -> McSummary:
    """Simulate one cell and summarize one estimator's error distribution.

    Deterministic given master_seed regardless of worker count.  Degenerate
    paths (denominator at or below the guard) are excluded and counted; more
    than DEGENERACY_ABORT_FRACTION of them aborts the cell.
    """
    if replications < 2:
        raise ValueError(f"replications must be >= 2, got {replications}")
    theta = params.theta
    stats = _cell_stats_cached(
        params.theta, params.delta, params.n, replications, master_seed
    )
    if estimator is Estimator.AMCE:
        den = stats.f_body if convention is IndexConvention.BODY else stats.f_abs
        good = den > EPS_DEN
        estimates = 1.0 / (2.0 * den[good])
    elif estimator is Estimator.AMLE:
        good = stats.s_n / params.horizon > EPS_DEN
        estimates = stats.amle_num[good] / stats.s_n[good]
    else:
        raise TypeError(f"estimator must be an Estimator, got {estimator!r}")
    degenerate = replications - int(np.count_nonzero(good))
    if degenerate > DEGENERACY_ABORT_FRACTION * replications:
        raise ExcessiveDegeneracy(
            f"{degenerate} of {replications} paths degenerate at cell "
            f"(n={params.n}, delta={params.delta}); exceeds "
            f"{DEGENERACY_ABORT_FRACTION:.1%}"
        )

    errors = estimates - theta
    nerr = math.sqrt(params.horizon / (2.0 * theta)) * errors
    cumulants = sample_cumulants(nerr) if nerr.size >= 4 else None
    distance = distance_report(nerr, n_bootstrap=n_bootstrap, seed=master_seed)
    checks = _oracle_checks(params, convention, stats, cumulants)
    return McSummary(
        cell=(params.n, params.delta),
        estimator=estimator,
        replications=replications,
        theta=theta,
        convention=convention,
        distance=distance,
        cumulants=cumulants,
        mean_error=float(np.mean(errors)),
        rmse=float(np.sqrt(np.mean(errors**2))),
        mae=float(np.mean(np.abs(errors))),
        degenerate_count=degenerate,
        oracle_checks=checks,
    )


def fit_rate(
    cells,
    *,
    schedule: str = "",
    response: RateResponse | None = None,
    predictor: str = "",
) -> RateFit:
    """Log-log least squares of distance against a bound expression.

    cells is an iterable of (bound_value, distance) pairs; needs at least 3,
    all strictly positive.  A slope near 1 supports the bound as an envelope;
    slopes are reported, never asserted here (the constant is unknown).
    """
    pairs = [(float(b), float(d)) for b, d in cells]
    if len(pairs) < 3:
        raise InsufficientCells(f"rate fit needs >= 3 cells, got {len(pairs)}")
    if any(b <= 0.0 or d <= 0.0 for b, d in pairs):
        raise NonPositiveValue("rate fit needs strictly positive bounds and distances")
    x = np.log([b for b, _ in pairs])
    y = np.log([d for _, d in pairs])
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise NonPositiveValue("bound values are all equal; no rate to fit")
    slope = float(np.dot(dx, dy)) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_res = float(np.sum((y - (intercept + slope * x)) ** 2))
    ss_tot = float(np.dot(dy, dy))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(
        schedule=schedule,
        response=response,
        predictor=predictor,
        slope=slope,
        intercept=intercept,
        r2=r2,
        n_cells=len(pairs),
    )


def run_schedule(
    schedule: Schedule,
    estimator: Estimator,
    replications: int,
    master_seed: int,
    *,
    theta: float = 1.0,
    convention: IndexConvention = IndexConvention.BODY,
    n_bootstrap: int = 200,
) -> ScheduleResult:
    """Run every cell of a schedule and fit W1 against the rate bound.

    Rate fits are CLT statements, so they are produced only for CLT-valid
    schedules (with >= 3 cells and >= 100 replications); other schedules get
    summaries with no fit.
    """
    summaries = tuple(
        run_cell(
            cell.params(theta),
            estimator,
            replications,
            master_seed,
            convention=convention,
            n_bootstrap=n_bootstrap,
        )
        for cell in schedule.cells
    )
    bound_fit = dominant_fit = None
    if schedule.clt_valid:
        if replications < 100:
            raise ValueError(
                f"rate fits need replications >= 100, got {replications}"
            )
        response = (
            RateResponse.W1_AMCE if estimator is Estimator.AMCE else RateResponse.W1_AMLE
        )
        w1 = [s.distance.w1 for s in summaries]
        terms = [bound_terms(cell, estimator) for cell in schedule.cells]
        if estimator is Estimator.AMCE:
            predictor = "delta^2 + (n delta)^(-1/2)"
        else:
            predictor = "(n delta)^(-1/2) + (n delta^3)^(1/2)"
        bound_fit = fit_rate(
            [(t1 + t2, d) for (t1, t2), d in zip(terms, w1)],
            schedule=schedule.name,
            response=response,
            predictor=predictor,
        )
        dominant_fit = fit_rate(
            [(max(t1, t2), d) for (t1, t2), d in zip(terms, w1)],
            schedule=schedule.name,
            response=response,
            predictor="dominant bound term",
        )
    return ScheduleResult(
        schedule=schedule,
        estimator=estimator,
        summaries=summaries,
        bound_fit=bound_fit,
        dominant_fit=dominant_fit,
    )


@dataclass(frozen=True)
class CouplingRow:
    n: int
    delta: float
    l2: float
    l4: float
    l2_scaled: float  # l2 * (n * delta)


@dataclass(frozen=True)
class CouplingReport:
    rows: tuple[CouplingRow, ...]
    spread: float  # max / min of l2_scaled across rows
    within_factor_10: bool


def coupling_check(
    cells,
    replications: int,
    master_seed: int,
    *,
    theta: float = 1.0,
    convention: IndexConvention = IndexConvention.BODY,
    force_z0_zero: bool = False,
) -> CouplingReport:
    """Empirical L2/L4 norms of F_n(X) - F_n(Z) on coupled paths.

    Accepts an OuParams, a Schedule, or an iterable of (n, delta) pairs.  The
    scaled column l2 * (n delta) is the quantity whose spread across cells the
    factor-10 check constrains.  With force_z0_zero the stationary path starts
    at 0 and equals the from-zero path, so every norm is exactly 0: the
    statistic is recomputed from identical values, which is the identity the
    flag exists to demonstrate.
    """
    if isinstance(cells, OuParams):
        theta = cells.theta
        cell_list = [ScheduleCell(n=cells.n, delta=cells.delta)]
    elif isinstance(cells, Schedule):
        cell_list = list(cells.cells)
    else:
        cell_list = [ScheduleCell(n=int(n), delta=float(d)) for n, d in cells]
    rows = []
    for cell in cell_list:
        params = cell.params(theta)
        stats = _cell_stats_cached(
            params.theta, params.delta, params.n, replications, master_seed
        )
        if convention is IndexConvention.BODY:
            fx, fz = stats.f_body, stats.fz_body
        else:
            fx, fz = stats.f_abs, stats.fz_abs
        if force_z0_zero:
            fz = fx
        diff = math.sqrt(params.horizon) * (fx - fz)
        l2 = float(np.sqrt(np.mean(diff**2)))
        l4 = float(np.mean(diff**4) ** 0.25)
        rows.append(
            CouplingRow(
                n=cell.n,
                delta=cell.delta,
                l2=l2,
                l4=l4,
                l2_scaled=l2 * cell.horizon,
            )
        )
    scaled = [r.l2_scaled for r in rows]
    if any(s == 0.0 for s in scaled):
        spread = 1.0 if all(s == 0.0 for s in scaled) else math.inf
    else:
        spread = max(scaled) / min(scaled)
    return CouplingReport(
        rows=tuple(rows),
        spread=spread,
        within_factor_10=spread <= 10.0,
    )


@dataclass(frozen=True)
class ConsistencyRow:
    n: int
    delta: float
    mae: float
    mae_se: float
    mean_estimate: float


@dataclass(frozen=True)
class ConsistencyReport:
    estimator: Estimator
    regime: str  # "clt" or "negative-control"
    rows: tuple[ConsistencyRow, ...]
    strictly_decreasing: bool
    significant_decrease: bool  # first vs last at 3 combined SEs


def consistency_check(
    schedule: Schedule,
    estimator: Estimator,
    replications: int,
    master_seed: int,
    *,
    theta: float = 1.0,
    convention: IndexConvention = IndexConvention.BODY,
) -> ConsistencyReport:
    """Mean absolute error per cell with a significance flag for the decay.

    For a CLT-valid schedule a significant decrease supports consistency; for
    a negative control (fixed horizon) the report records whatever happened
    and asserts nothing.
    """
    rows = []
    for cell in schedule.cells:
        params = cell.params(theta)
        stats = _cell_stats_cached(
            params.theta, params.delta, params.n, replications, master_seed
        )
        if estimator is Estimator.AMCE:
            den = stats.f_body if convention is IndexConvention.BODY else stats.f_abs
            good = den > EPS_DEN
            estimates = 1.0 / (2.0 * den[good])
        else:
            good = stats.s_n / params.horizon > EPS_DEN
            estimates = stats.amle_num[good] / stats.s_n[good]
        abs_err = np.abs(estimates - theta)
        rows.append(
            ConsistencyRow(
                n=cell.n,
                delta=cell.delta,
                mae=float(np.mean(abs_err)),
                mae_se=float(np.std(abs_err, ddof=1)) / math.sqrt(abs_err.size),
                mean_estimate=float(np.mean(estimates)),
            )
        )
    maes = [r.mae for r in rows]
    decreasing = all(b < a for a, b in zip(maes, maes[1:]))
    first, last = rows[0], rows[-1]
    gap = first.mae - last.mae
    significant = gap > 3.0 * math.hypot(first.mae_se, last.mae_se)
    return ConsistencyReport(
        estimator=estimator,
        regime="clt" if schedule.clt_valid else "negative-control",
        rows=tuple(rows),
        strictly_decreasing=decreasing,
        significant_decrease=significant,
    )
