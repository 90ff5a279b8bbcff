"""Analytical recurrence, closed form, and optimal coordination-level search.

The deterministic approximation of the process gives a linear recurrence
P_{i+1} = A P_i + P0 whose closed form is the expected number of finished
parts after all users.  This module evaluates that track and searches for
the coordination probability beta* that maximizes finished parts, per point
and over (N, E) grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BudgetExceededError
from .model import ModelParams, exact_expectation, monte_carlo

OBJECTIVES = ("closed_form", "exact_dp", "monte_carlo")

# below this distance from A = 1 the limit form E * P0 is used
A1_EPS = 1e-12

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RecurrenceCoeffs:
    a: float
    p0: float


@dataclass(frozen=True)
class SearchConfig:
    grid_step: float = 0.01
    refine_tol: float = 1e-6
    tie_tol: float = 1e-12
    runs: int | None = None
    seed: int = 0
    clamp: bool = False


@dataclass(frozen=True)
class OptResult:
    beta_star: float
    value: float
    objective: str
    grid_step: float
    runs: int | None = None


@dataclass(frozen=True)
class BetaGrid:
    n_values: tuple[int, ...]
    e_values: tuple[int, ...]
    alpha: float
    objective: str
    cells: list[list[OptResult | None]]
    grid_step: float
    runs: int | None = None
    seed: int = 0
    errors: dict[tuple[int, int], str] = field(default_factory=dict)


def _validate(n_parts: int, alpha: float, beta: float) -> None:
    if n_parts < 1:
        raise ValueError(f"n_parts must be >= 1, got {n_parts}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")


def recurrence_coeffs(n_parts: int, alpha: float, beta: float) -> RecurrenceCoeffs:
    """Multiplier A and constant P0 of the deterministic recurrence."""
    _validate(n_parts, alpha, beta)
    n = n_parts
    w = (1.0 - beta) * (1.0 + alpha)
    a = w * (1.0 + alpha) / n**2 - 2.0 * w / n + 1.0
    p0 = -w / n + 2.0 - beta
    return RecurrenceCoeffs(a=a, p0=p0)


def approx_expectation(
    n_parts: int, n_users: int, alpha: float, beta: float, clamp: bool = False
) -> float:
    """Closed-form expected finished parts after n_users.

    Does not model saturation: at beta = 1 it returns n_users even when
    n_users > n_parts.  Pass clamp=True to cap the value at n_parts.
    """
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")
    coeffs = recurrence_coeffs(n_parts, alpha, beta)
    if abs(coeffs.a - 1.0) <= A1_EPS:
        value = n_users * coeffs.p0
    else:
        value = coeffs.p0 * (coeffs.a**n_users - 1.0) / (coeffs.a - 1.0)
    return min(value, float(n_parts)) if clamp else value


def iterate_recurrence(n_parts: int, n_users: int, alpha: float, beta: float) -> float:
    """Iterative evaluation of the recurrence; cross-checks the closed form."""
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")
    coeffs = recurrence_coeffs(n_parts, alpha, beta)
    p = 0.0
    for _ in range(n_users):
        p = coeffs.a * p + coeffs.p0
    return p


def _spawn_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


def _golden_section_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    x = (lo + hi) / 2.0
    return x, f(x)


def optimal_beta(
    n_parts: int,
    n_users: int,
    alpha: float,
    objective: str,
    config: SearchConfig = SearchConfig(),
) -> OptResult:
    """Maximize the chosen objective over beta in [0, 1].

    Coarse grid scan (ties within tie_tol break toward the smallest beta),
    then golden-section refinement on the bracketing interval for the smooth
    objectives.  The Monte Carlo objective is noisy and reports the best
    grid point instead of refining.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    if objective == "monte_carlo" and config.runs is None:
        raise ValueError("monte_carlo objective requires a runs setting")
    _validate(n_parts, alpha, 0.0)
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")

    if objective == "closed_form":
        def f(beta: float) -> float:
            return approx_expectation(n_parts, n_users, alpha, beta, clamp=config.clamp)
    elif objective == "exact_dp":
        def f(beta: float) -> float:
            return exact_expectation(ModelParams(n_parts, n_users, alpha, beta))
    else:
        def f(beta: float, _idx: int = 0) -> float:  # seed varies by grid index
            raise AssertionError("monte_carlo objective evaluated off-grid")

    n_steps = max(1, round(1.0 / config.grid_step))
    betas = np.linspace(0.0, 1.0, n_steps + 1)
    if objective == "monte_carlo":
        values = [
            monte_carlo(
                ModelParams(n_parts, n_users, alpha, float(b)),
                config.runs,
                _spawn_seed(config.seed, i),
            ).mean_finished
            for i, b in enumerate(betas)
        ]
    else:
        values = [f(float(b)) for b in betas]

    best_i = 0
    for i, v in enumerate(values):
        if v > values[best_i] + config.tie_tol:
            best_i = i
    best_beta = float(betas[best_i])
    best_value = float(values[best_i])

    if objective != "monte_carlo":
        lo = float(betas[max(best_i - 1, 0)])
        hi = float(betas[min(best_i + 1, len(betas) - 1)])
        x, fx = _golden_section_max(f, lo, hi, config.refine_tol)
        if fx > best_value + config.tie_tol:
            best_beta, best_value = x, fx

    return OptResult(
        beta_star=best_beta,
        value=best_value,
        objective=objective,
        grid_step=config.grid_step,
        runs=config.runs if objective == "monte_carlo" else None,
    )


def beta_heatmap(
    n_values,
    e_values,
    alpha: float,
    objective: str,
    config: SearchConfig = SearchConfig(),
) -> BetaGrid:
    """Per-cell optimal beta over an (N, E) grid; rows are E, columns are N.

    Per-cell failures are recorded in the grid's error map, not raised.
    """
    n_values = tuple(int(n) for n in n_values)
    e_values = tuple(int(e) for e in e_values)
    if not n_values or not e_values:
        raise ValueError("n_values and e_values must be non-empty")
    if list(n_values) != sorted(set(n_values)) or list(e_values) != sorted(set(e_values)):
        raise ValueError("n_values and e_values must be strictly ascending")

    cells: list[list[OptResult | None]] = []
    errors: dict[tuple[int, int], str] = {}
    for ri, e in enumerate(e_values):
        row: list[OptResult | None] = []
        for ci, n in enumerate(n_values):
            cell_config = replace(config, seed=_spawn_seed(config.seed, ri, ci))
            try:
                row.append(optimal_beta(n, e, alpha, objective, cell_config))
            except (ValueError, BudgetExceededError) as exc:
                row.append(None)
                errors[(ri, ci)] = str(exc)
        cells.append(row)
    return BetaGrid(
        n_values=n_values,
        e_values=e_values,
        alpha=alpha,
        objective=objective,
        cells=cells,
        grid_step=config.grid_step,
        runs=config.runs if objective == "monte_carlo" else None,
        seed=config.seed,
        errors=errors,
    )


def grid_to_csv(grid: BetaGrid) -> str:
    """CSV matrix: first row = N values, first column = E values, beta* to 4 dp."""
    lines = [
        f"# alpha={grid.alpha}",
        f"# objective={grid.objective}",
        f"# grid_step={grid.grid_step}",
        f"# runs={grid.runs if grid.runs is not None else 'NA'}",
        f"# seed={grid.seed}",
        "," + ",".join(str(n) for n in grid.n_values),
    ]
    for e, row in zip(grid.e_values, grid.cells):
        cells = [f"{r.beta_star:.4f}" if r is not None else "NA" for r in row]
        lines.append(f"{e}," + ",".join(cells))
    return "\n".join(lines) + "\n"
