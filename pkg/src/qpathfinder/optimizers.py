"""Outer-loop optimizers for variational parameters.

Every method draws objective values only through :class:`Objective`, so the
evaluation counter is the single source of truth for circuit-execution cost.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

METHODS = ("adam", "nelder-mead", "umda", "quasi-newton")
METHOD_LABELS = {
    "adam": "adam",
    "nelder-mead": "nelder-mead",
    "umda": "umda",
    "quasi-newton": "quasi-newton (SLSQP-role)",
}


class OptimizerError(ValueError):
    pass


class _OutOfBudget(Exception):
    pass


class _OutOfTime(Exception):
    pass


class Objective:
    """Counts every call, gradient probes included."""

    def __init__(self, fn: Callable, dimension: int, sink: Optional[Callable] = None):
        self.fn = fn
        self.dimension = int(dimension)
        self.sink = sink
        self.evaluations = 0

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise OptimizerError(f"expected a vector of length {self.dimension}, got shape {x.shape}")
        self.evaluations += 1
        val = float(self.fn(x))
        if self.sink is not None:
            self.sink(x, val)
        return val


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "quasi-newton"
    max_iter: int = 500
    max_evals: int = 20_000
    tolerance: float = 1e-6
    window: int = 10
    seed: int = 0
    timeout: Optional[float] = None
    fd_step: float = 1e-3
    gtol: float = 1e-3  # adam/quasi-newton stationarity guard on the gradient norm
    # adam
    step: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    # nelder-mead
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    simplex_step: float = 0.1
    # umda
    population: int = 40
    elite_fraction: float = 0.25
    variance_floor: float = 1e-6
    init_sigma: float = 0.5
    # quasi-newton line search
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 30

    def __post_init__(self):
        if self.method not in METHODS:
            raise OptimizerError(f"unknown optimizer {self.method!r}; choose from {METHODS}")
        if self.max_iter <= 0 or self.max_evals <= 0:
            raise OptimizerError("max_iter and max_evals must be positive")
        if not 0 < self.elite_fraction < 1:
            raise OptimizerError("elite_fraction must lie in (0, 1)")
        for name in ("tolerance", "fd_step", "gtol", "step", "population", "variance_floor",
                     "init_sigma", "simplex_step", "window"):
            if not getattr(self, name) > 0:
                raise OptimizerError(f"{name} must be positive")
        if self.timeout is not None and not self.timeout > 0:
            raise OptimizerError("timeout must be positive")

    @property
    def n_elite(self) -> int:
        return max(1, int(round(self.elite_fraction * self.population)))


@dataclass
class OptimizerTrace:
    method: str
    params: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    best_energies: list = field(default_factory=list)
    eval_counts: list = field(default_factory=list)
    evaluations: int = 0
    extra_evaluations: int = 0
    termination: str = ""
    wall_time: float = 0.0

    def record(self, x, energy: float, evals: int) -> None:
        self.params.append(np.array(x, dtype=float))
        self.energies.append(float(energy))
        prev = self.best_energies[-1] if self.best_energies else np.inf
        self.best_energies.append(min(prev, float(energy)))
        self.eval_counts.append(int(evals))

    def __len__(self):
        return len(self.energies)

    @property
    def best_energy(self) -> float:
        return self.best_energies[-1]

    @property
    def best_params(self) -> np.ndarray:
        return self.params[int(np.argmin(self.energies))]

    def summary(self) -> dict:
        return {
            "method": METHOD_LABELS.get(self.method, self.method),
            "iterations": len(self) - 1,
            "evaluations": self.evaluations,
            "initial_energy": self.energies[0] if self.energies else None,
            "best_energy": self.best_energy if self.energies else None,
            "termination": self.termination,
        }


def init_params(p: int, strategy: str = "linear-ramp", seed: int = 0) -> np.ndarray:
    """(gammas, betas) stacked into one vector of length 2p."""
    if p < 1:
        raise OptimizerError(f"p must be >= 1, got {p}")
    if strategy == "linear-ramp":
        frac = np.arange(1, p + 1) / p
        return np.concatenate([0.5 * frac, 0.5 * (1.0 - frac)])
    if strategy == "uniform-random":
        rng = np.random.default_rng(seed)
        return np.concatenate([rng.uniform(0, np.pi, p), rng.uniform(0, np.pi / 2, p)])
    raise OptimizerError(f"unknown init strategy {strategy!r}")


def evaluation_cost(method: str, d: int, cfg: Optional[OptimizerConfig] = None) -> int:
    """Objective evaluations per iteration (amortized upper value for nelder-mead)."""
    if method in ("adam", "quasi-newton"):
        return 2 * d + 1
    if method == "nelder-mead":
        return 2
    if method == "umda":
        return (cfg or OptimizerConfig(method="umda")).population
    raise OptimizerError(f"unknown optimizer {method!r}")


class _Run:
    """Budget/timeout guard plus trace bookkeeping shared by all methods."""

    def __init__(self, obj: Objective, cfg: OptimizerConfig):
        self.obj = obj
        self.cfg = cfg
        self.trace = OptimizerTrace(cfg.method)
        self.start = time.perf_counter()
        self.base = obj.evaluations

    @property
    def used(self) -> int:
        return self.obj.evaluations - self.base

    def f(self, x) -> float:
        if self.used >= self.cfg.max_evals:
            raise _OutOfBudget
        if self.cfg.timeout is not None and time.perf_counter() - self.start > self.cfg.timeout:
            raise _OutOfTime
        return self.obj(x)

    def grad(self, x) -> np.ndarray:
        h = self.cfg.fd_step
        g = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            g[i] = (self.f(x + e) - self.f(x - e)) / (2 * h)
        return g

    def record(self, x, energy, stationary: bool = True) -> bool:
        """Log an iterate; True when the improvement window says stop.

        ``stationary`` is the method's own guard so that a plateau of the
        best value alone does not count as convergence.
        """
        self.trace.record(x, energy, self.used)
        best = self.trace.best_energies
        w = self.cfg.window
        stalled = len(best) > w and best[-1 - w] - best[-1] < self.cfg.tolerance
        return stalled and stationary


def _adam(run: _Run, x0):
    cfg = run.cfg
    x = x0.copy()
    run.record(x, run.f(x))
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    for k in range(1, cfg.max_iter + 1):
        g = run.grad(x)
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        mhat = m / (1 - cfg.beta1 ** k)
        vhat = v / (1 - cfg.beta2 ** k)
        x = x - cfg.step * mhat / (np.sqrt(vhat) + cfg.adam_eps)
        if run.record(x, run.f(x), np.linalg.norm(g) < cfg.gtol):
            return "converged"
    return "max-iter"


def _nelder_mead(run: _Run, x0):
    cfg = run.cfg
    d = x0.size
    pts = [x0.copy()] + [x0 + cfg.simplex_step * np.eye(d)[i] for i in range(d)]
    vals = [run.f(p) for p in pts]

    def order():
        idx = sorted(range(d + 1), key=lambda i: (vals[i], i))
        return [pts[i] for i in idx], [vals[i] for i in idx]

    pts, vals = order()
    run.record(pts[0], vals[0])
    for _ in range(cfg.max_iter):
        centroid = np.mean(pts[:-1], axis=0)
        worst, f_worst = pts[-1], vals[-1]
        xr = centroid + cfg.reflection * (centroid - worst)
        fr = run.f(xr)
        if vals[0] <= fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
        elif fr < vals[0]:
            xe = centroid + cfg.expansion * (xr - centroid)
            fe = run.f(xe)
            pts[-1], vals[-1] = (xe, fe) if fe < fr else (xr, fr)
        else:
            if fr < f_worst:
                xc = centroid + cfg.contraction * (xr - centroid)
                fc = run.f(xc)
                accept = fc <= fr
            else:
                xc = centroid + cfg.contraction * (worst - centroid)
                fc = run.f(xc)
                accept = fc < f_worst
            if accept:
                pts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, d + 1):
                    pts[i] = pts[0] + cfg.shrink * (pts[i] - pts[0])
                    vals[i] = run.f(pts[i])
                run.trace.extra_evaluations += d
        pts, vals = order()
        if run.record(pts[0], vals[0], vals[-1] - vals[0] < cfg.tolerance):
            return "converged"
    return "max-iter"


def _umda(run: _Run, x0):
    cfg = run.cfg
    rng = np.random.default_rng(cfg.seed)
    mean = x0.copy()
    sigma = np.full(x0.size, cfg.init_sigma)
    floor = np.sqrt(cfg.variance_floor)
    run.record(x0, run.f(x0))
    for _ in range(cfg.max_iter):
        pop = mean + sigma * rng.standard_normal((cfg.population, x0.size))
        fit = np.array([run.f(x) for x in pop])
        rank = np.argsort(fit, kind="stable")
        elite = pop[rank[: cfg.n_elite]]
        mean = elite.mean(axis=0)
        sigma = np.maximum(elite.std(axis=0), floor)
        if run.record(pop[rank[0]], fit[rank[0]]):
            return "converged"
    return "max-iter"


def _quasi_newton(run: _Run, x0):
    """BFGS on central-difference gradients with Armijo backtracking."""
    cfg = run.cfg
    d = x0.size
    x = x0.copy()
    fx = run.f(x)
    run.record(x, fx)
    H = np.eye(d)
    g_prev = s = None
    for _ in range(cfg.max_iter):
        g = run.grad(x)
        if s is not None:
            y = g - g_prev
            sy = float(s @ y)
            if sy > 1e-12:
                rho = 1.0 / sy
                I = np.eye(d)
                H = (I - rho * np.outer(s, y)) @ H @ (I - rho * np.outer(y, s)) + rho * np.outer(s, s)
        if not np.all(np.isfinite(g)) or np.linalg.norm(g) < 1e-12:
            return "converged"
        direction = -H @ g
        slope = float(g @ direction)
        if slope >= 0:
            H = np.eye(d)
            direction = -g
            slope = float(g @ direction)
        alpha = 1.0
        trial = x + alpha * direction
        f_trial = run.f(trial)
        tries = 0
        while f_trial > fx + cfg.armijo * alpha * slope:
            if tries >= cfg.max_backtracks:
                return "converged"
            alpha *= cfg.backtrack
            trial = x + alpha * direction
            f_trial = run.f(trial)
            tries += 1
        run.trace.extra_evaluations += tries
        s = trial - x
        g_prev = g
        x, fx = trial, f_trial
        if run.record(x, fx, np.linalg.norm(g) < cfg.gtol):
            return "converged"
    return "max-iter"


_DISPATCH = {
    "adam": _adam,
    "nelder-mead": _nelder_mead,
    "umda": _umda,
    "quasi-newton": _quasi_newton,
}


def minimize(obj: Objective, x0, cfg: OptimizerConfig = OptimizerConfig()) -> OptimizerTrace:
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != obj.dimension:
        raise OptimizerError(f"x0 has {x0.size} entries, objective expects {obj.dimension}")
    run = _Run(obj, cfg)
    try:
        reason = _DISPATCH[cfg.method](run, x0)
    except _OutOfBudget:
        reason = "max-evals"
    except _OutOfTime:
        reason = "timeout"
    trace = run.trace
    trace.termination = reason
    trace.evaluations = run.used
    trace.wall_time = time.perf_counter() - run.start
    return trace


def trace_rows(trace: OptimizerTrace) -> tuple[list[str], list[list]]:
    d = len(trace.params[0]) if trace.params else 0
    header = ["iter", "eval_count", "energy", "best_energy"] + [f"param_{i}" for i in range(d)]
    rows = [
        [k, trace.eval_counts[k], trace.energies[k], trace.best_energies[k], *trace.params[k]]
        for k in range(len(trace))
    ]
    return header, rows
