"""Finite-horizon regime-switching allocation for a CRRA investor.

One risky portfolio with returns ``r = lambda(D) h + sqrt(h) z`` and a
risk-free asset. Wealth grows as ``W' = W exp(pi (r - rf) + rf)``; the
variance state follows the asymmetric one-step recursion and the regime a
two-state Markov chain.

Homogeneity gives ``V_t = W**gamma / gamma * exp(J_t(h, D))``. Each node
solves

    CE(pi) = (1/gamma) ln sum_d' p[D, d'] E_z exp{gamma (pi (r - rf) + rf) + J_{t+1}(h', d')}
    pi*    = argmax_{pi in [0, 1]} CE(pi),   J_t = gamma * CE(pi*)

Maximizing the certainty equivalent is the correct objective for either
sign of ``gamma``; for ``gamma < 0`` it *minimizes* the log-expectation.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import NumericalError, as_rng, check_positive_int, check_state
from .regime_model import RegimePricing, TransitionMatrix, price_of_risk
from .vol_models.gjr import GjrStateParams, gjr_state_step

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class UtilitySpec:
    """CRRA ``U(W) = W**gamma / gamma`` and the per-period risk-free rate."""

    gamma: float = -5.0
    risk_free: float = 0.0

    def __post_init__(self):
        if self.gamma == 0 or not math.isfinite(self.gamma):
            raise ValueError("CRRA exponent gamma must be finite and non-zero")
        if not math.isfinite(self.risk_free):
            raise ValueError("risk-free rate must be finite")


@dataclass(frozen=True)
class RegimeAllocationModel:
    state: GjrStateParams
    pricing: RegimePricing
    transition: TransitionMatrix
    utility: UtilitySpec = field(default_factory=UtilitySpec)

    def premia(self):
        return np.array([price_of_risk(self.pricing, 0), price_of_risk(self.pricing, 1)])

    def to_dict(self):
        return {
            "state": self.state.to_dict(),
            "pricing": asdict(self.pricing),
            "transition": self.transition.p.tolist(),
            "utility": asdict(self.utility),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            state=GjrStateParams(**d["state"]),
            pricing=RegimePricing(**d["pricing"]),
            transition=TransitionMatrix(np.asarray(d["transition"], dtype=float)),
            utility=UtilitySpec(**d.get("utility", {})),
        )

    def fingerprint(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class StateGrid:
    """Strictly increasing positive variance nodes."""

    h_nodes: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h_nodes, dtype=float)
        if h.ndim != 1 or h.size < 2:
            raise ValueError("state grid needs at least two nodes")
        if np.any(h <= 0) or np.any(np.diff(h) <= 0):
            raise ValueError("state grid nodes must be positive and strictly increasing")
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "h_nodes", h)

    @property
    def n_h(self):
        return self.h_nodes.size

    @property
    def log_nodes(self):
        return np.log(self.h_nodes)


def grid_center(state):
    """Unconditional variance when it exists, else the ``z = 0`` fixed point ``omega / (1 - beta)``."""
    uncond = state.unconditional_variance()
    if uncond is not None:
        return uncond
    if state.beta < 1:
        return state.omega / (1.0 - state.beta)
    return state.omega


def log_grid(center, n=200, span=50.0):
    """``n`` log-spaced nodes over ``[center / span, center * span]``."""
    return StateGrid(np.geomspace(center / span, center * span, check_positive_int(n, "n", 2)))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights for expectations over a standard normal."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if z.shape != w.shape or z.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("quadrature weights must be non-negative and sum to 1")
        object.__setattr__(self, "nodes", z)
        object.__setattr__(self, "weights", w)


def gauss_hermite_rule(n=41):
    """Probabilists' Gauss-Hermite rule normalised to the N(0, 1) density.

    For odd ``n`` one node sits at ``z = 0``; the leverage indicator
    multiplies ``z**2`` there, so its value cannot matter.
    """
    z, w = hermegauss(check_positive_int(n, "n"))
    w = w / w.sum()
    rule = QuadratureRule(z, w)
    odd = [abs(np.dot(w, z**k)) for k in (1, 3, 5)]
    if max(odd) > 1e-10:
        raise NumericalError("quadrature rule is not symmetric")
    return rule


@dataclass(frozen=True, eq=False)
class ValueSurface:
    """``J[t, j, d]`` for ``t = 0..T``; ``J[T] = 0``."""

    J: np.ndarray
    grid: StateGrid


@dataclass(frozen=True, eq=False)
class PolicySurface:
    """Optimal risky fraction ``pi_star[t, j, d]`` for ``t = 0..T-1``."""

    pi_star: np.ndarray
    grid: StateGrid

    @property
    def horizon(self):
        return self.pi_star.shape[0]

    def allocation(self, t, h, d):
        """Policy at arbitrary variances: linear in ``ln h``, flat outside the grid."""
        h = np.asarray(h, dtype=float)
        d = np.asarray(d)
        x = np.log(h)
        xs = self.grid.log_nodes
        a0 = np.interp(x, xs, self.pi_star[t, :, 0])
        a1 = np.interp(x, xs, self.pi_star[t, :, 1])
        return np.where(d == 1, a1, a0)


class _Continuation:
    """Interpolation of ``J_{t+1}`` at next-period variances ``h'(h_j, z_i)``.

    ``h'`` depends only on the grid and the quadrature nodes, so the
    bracketing indices and weights are computed once per solve.
    """

    def __init__(self, grid, h_next):
        xs = grid.log_nodes
        x = np.clip(np.log(h_next), xs[0], xs[-1])
        idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)
        self.idx = idx
        self.w = (x - xs[idx]) / (xs[idx + 1] - xs[idx])
        self.extrapolated = bool(np.any(np.log(h_next) < xs[0]) or np.any(np.log(h_next) > xs[-1]))

    def __call__(self, J_slice):
        """``J_slice`` is ``(n_h, 2)``; returns ``(..., 2)`` at every ``h'``."""
        lo = J_slice[self.idx]
        hi = J_slice[self.idx + 1]
        return lo + self.w[..., None] * (hi - lo)


def _log_sum_exp(a, axis=-1):
    m = np.max(a, axis=axis, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise NumericalError("non-finite exponent in certainty-equivalent evaluation")
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


def _mixed_continuation(J_next_at, log_p):
    """``ln sum_d' p[d, d'] exp(J(h', d'))`` with shape ``(..., 2)`` indexed by current ``d``."""
    a = J_next_at[..., None, :] + log_p
    return _log_sum_exp(a, axis=-1)


class _NodeProblem:
    """Vectorised CE(pi) for every (h node, current state) pair at one time step.

    exponent_i(pi) = pi * slope[j, d, i] + offset[j, d, i]
    """

    def __init__(self, model, h, quad, mixed):
        gamma = model.utility.gamma
        rf = model.utility.risk_free
        mu = model.premia()
        excess = mu[None, :, None] * h[:, None, None] + np.sqrt(h)[:, None, None] * quad.nodes[None, None, :] - rf
        self.gamma = gamma
        self.slope = gamma * excess
        with np.errstate(divide="ignore"):
            logw = np.log(quad.weights)
        # mixed has shape (n_h, n_q, 2) -> (n_h, 2, n_q)
        self.offset = gamma * rf + np.moveaxis(mixed, -1, 1) + logw[None, None, :]

    def ce(self, pi):
        """``pi`` broadcastable to ``(n_h, 2)`` or ``(n_h, 2, k)``."""
        pi = np.asarray(pi, dtype=float)
        if pi.ndim == self.slope.ndim - 1:
            expo = pi[..., None] * self.slope + self.offset
            return _log_sum_exp(expo) / self.gamma
        expo = pi[..., None] * self.slope[:, :, None, :] + self.offset[:, :, None, :]
        return _log_sum_exp(expo) / self.gamma


def _maximize(problem, pi_search, tol):
    grid = np.linspace(0.0, 1.0, pi_search)
    ce_grid = problem.ce(np.broadcast_to(grid, problem.slope.shape[:2] + (pi_search,)))
    k = np.argmax(ce_grid, axis=-1)
    best_pi = grid[k]
    best_ce = np.take_along_axis(ce_grid, k[..., None], axis=-1)[..., 0]
    step = 1.0 / (pi_search - 1)
    lo = np.clip(best_pi - step, 0.0, 1.0)
    hi = np.clip(best_pi + step, 0.0, 1.0)
    a, b = lo.copy(), hi.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = problem.ce(c), problem.ce(d)
    while np.max(b - a) > tol:
        left = fc > fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - GOLDEN * (b - a)
        new_d = a + GOLDEN * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fc_next = np.where(left, problem.ce(new_c), fd)
        fd_next = np.where(left, fc, problem.ce(new_d))
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
    cand = np.clip(0.5 * (a + b), 0.0, 1.0)
    cand_ce = problem.ce(cand)
    better = cand_ce > best_ce
    pi_star = np.where(better, cand, best_pi)
    return pi_star


def continuation_interpolant(grid, J_slice):
    """Callable ``J(h', d')`` built from a ``(n_h, 2)`` value slice."""
    xs = grid.log_nodes
    J_slice = np.asarray(J_slice, dtype=float)

    def f(h, d):
        return np.interp(np.log(h), xs, J_slice[:, d])

    return f


def certainty_equivalent(pi, h, d, model, quad=None, J_next=None):
    """Certainty equivalent of holding ``pi`` for one period at state ``(h, d)``.

    ``J_next(h_array, d_next)`` is the continuation value; ``None`` means the
    terminal condition ``J = 0``. Evaluated in log-sum-exp form.
    """
    if not 0.0 <= pi <= 1.0:
        raise ValueError(f"pi must lie in [0, 1], got {pi}")
    if h <= 0:
        raise ValueError("variance must be positive")
    d = check_state(d, "d")
    quad = quad or gauss_hermite_rule()
    gamma, rf = model.utility.gamma, model.utility.risk_free
    z, w = quad.nodes, quad.weights
    r = price_of_risk(model.pricing, d) * h + math.sqrt(h) * z
    base = gamma * (pi * (r - rf) + rf)
    h_next = gjr_state_step(h, z, model.state)
    terms = []
    for d_next in (0, 1):
        p = model.transition.p[d, d_next]
        if p == 0:
            continue
        cont = 0.0 if J_next is None else np.asarray(J_next(h_next, d_next), dtype=float)
        with np.errstate(divide="ignore"):
            terms.append(math.log(p) + np.log(w) + base + cont)
    expo = np.concatenate([np.ravel(t) for t in terms])
    return float(_log_sum_exp(expo) / gamma)


@dataclass
class BellmanSolution:
    value: ValueSurface
    policy: PolicySurface
    extrapolated: bool
    quadrature_order: int
    model: RegimeAllocationModel

    def metadata(self):
        return {
            "grid": self.value.grid.h_nodes.tolist(),
            "horizon": self.policy.horizon,
            "quadrature_order": self.quadrature_order,
            "model": self.model.to_dict(),
            "model_hash": self.model.fingerprint(),
            "extrapolated": self.extrapolated,
        }


def solve_bellman(model, grid, horizon, quad=None, pi_search=101, tol=1e-5):
    """Backward induction from ``J_T = 0``.

    Each node maximises the certainty equivalent over a ``pi_search``-point
    grid on ``[0, 1]`` and refines the best bracket by golden-section search
    to ``tol``. Off-grid next-period variances are interpolated linearly in
    ``ln h`` with flat extrapolation; ``extrapolated`` reports whether any
    one-step variance left the grid.
    """
    horizon = check_positive_int(horizon, "horizon")
    pi_search = check_positive_int(pi_search, "pi_search", 3)
    quad = quad or gauss_hermite_rule()
    h = grid.h_nodes
    h_next = gjr_state_step(h[:, None], quad.nodes[None, :], model.state)
    cont = _Continuation(grid, h_next)
    with np.errstate(divide="ignore"):
        log_p = np.log(model.transition.p)

    J = np.zeros((horizon + 1, grid.n_h, 2))
    policy = np.zeros((horizon, grid.n_h, 2))
    for t in range(horizon - 1, -1, -1):
        mixed = _mixed_continuation(cont(J[t + 1]), log_p)
        problem = _NodeProblem(model, h, quad, mixed)
        pi_star = _maximize(problem, pi_search, tol)
        policy[t] = pi_star
        J[t] = model.utility.gamma * problem.ce(pi_star)
        if not np.all(np.isfinite(J[t])):
            bad = np.argwhere(~np.isfinite(J[t]))[0]
            raise NumericalError(f"value function overflow at t={t}, h={h[bad[0]]:.3e}, d={bad[1]}")
    return BellmanSolution(
        value=ValueSurface(J, grid),
        policy=PolicySurface(np.clip(policy, 0.0, 1.0), grid),
        extrapolated=cont.extrapolated,
        quadrature_order=quad.nodes.size,
        model=model,
    )


def node_certainty_equivalent(solution, t, pi):
    """CE of an arbitrary ``(n_h, 2)`` allocation at step ``t`` (Bellman residual checks)."""
    model = solution.model
    grid = solution.value.grid
    quad = gauss_hermite_rule(solution.quadrature_order)
    h_next = gjr_state_step(grid.h_nodes[:, None], quad.nodes[None, :], model.state)
    cont = _Continuation(grid, h_next)
    with np.errstate(divide="ignore"):
        log_p = np.log(model.transition.p)
    mixed = _mixed_continuation(cont(solution.value.J[t + 1]), log_p)
    return _NodeProblem(model, grid.h_nodes, quad, mixed).ce(np.asarray(pi, dtype=float))


# --------------------------------------------------------------------------
# forward simulation


@dataclass
class WealthPath:
    log_wealth: np.ndarray
    regime: np.ndarray
    variance: np.ndarray
    allocation: np.ndarray

    @property
    def wealth(self):
        return np.exp(self.log_wealth)


@dataclass
class WealthEnsemble:
    """Simulated paths, arrays shaped ``(n_paths, T + 1)`` (allocations and returns ``(n_paths, T)``)."""

    log_wealth: np.ndarray
    regimes: np.ndarray
    variances: np.ndarray
    allocations: np.ndarray
    returns: np.ndarray
    overflow: bool = False

    def path(self, i):
        return WealthPath(self.log_wealth[i], self.regimes[i], self.variances[i], self.allocations[i])

    def summary(self):
        term = self.log_wealth[:, -1]
        return {
            "n_paths": int(term.size),
            "horizon": int(self.allocations.shape[1]),
            "mean_terminal_log_wealth": float(np.mean(term)),
            "median_terminal_log_wealth": float(np.median(term)),
            "p05_terminal_log_wealth": float(np.quantile(term, 0.05)),
            "p95_terminal_log_wealth": float(np.quantile(term, 0.95)),
            "mean_allocation": float(np.mean(self.allocations)),
            "overflow": bool(self.overflow),
        }

    def quantile_paths(self, qs=(0.05, 0.5, 0.95)):
        return {q: np.quantile(self.log_wealth, q, axis=0) for q in qs}


def _simulate(model, allocate, horizon, w0, h0, d0, n_paths, seed, variance_cap=None):
    rng = as_rng(seed)
    rf = model.utility.risk_free
    mu = model.premia()
    stay1 = model.transition.p[:, 1]
    logw = np.empty((n_paths, horizon + 1))
    regimes = np.empty((n_paths, horizon + 1), dtype=np.int64)
    variances = np.empty((n_paths, horizon + 1))
    allocs = np.empty((n_paths, horizon))
    rets = np.empty((n_paths, horizon))
    logw[:, 0] = math.log(w0)
    regimes[:, 0] = d0
    variances[:, 0] = h0
    h = np.full(n_paths, float(h0))
    d = np.full(n_paths, d0, dtype=np.int64)
    for t in range(horizon):
        z = rng.standard_normal(n_paths)
        u = rng.random(n_paths)
        pi = np.clip(allocate(t, h, d), 0.0, 1.0)
        r = mu[d] * h + np.sqrt(h) * z
        logw[:, t + 1] = logw[:, t] + pi * (r - rf) + rf
        allocs[:, t], rets[:, t] = pi, r
        h = gjr_state_step(h, z, model.state)
        if variance_cap is not None:
            h = np.minimum(h, variance_cap)
        d = (u < stay1[d]).astype(np.int64)
        regimes[:, t + 1], variances[:, t + 1] = d, h
    overflow = not np.all(np.isfinite(logw))
    return WealthEnsemble(logw, regimes, variances, allocs, rets, overflow)


def simulate_wealth(model, policy, w0=1.0, h0=None, d0=0, n_paths=1000, seed=None, variance_cap=None):
    """Forward-simulate wealth under ``policy`` (a :class:`PolicySurface`).

    Draws ``z ~ N(0, 1)`` and regime moves each period, forms
    ``r_t = lambda(D_t) h_t + sqrt(h_t) z_t`` and compounds
    ``W_{t+1} = W_t exp(pi (r_t - rf) + rf)`` in log space.
    """
    d0 = check_state(d0, "d0")
    h0 = grid_center(model.state) if h0 is None else float(h0)
    if w0 <= 0:
        raise ValueError("initial wealth must be positive")
    return _simulate(model, policy.allocation, policy.horizon, w0, h0, d0,
                     check_positive_int(n_paths, "n_paths"), seed, variance_cap)


def simulate_constant(model, pi, horizon, w0=1.0, h0=None, d0=0, n_paths=1000, seed=None):
    """Same simulation with a fixed allocation ``pi``."""
    h0 = grid_center(model.state) if h0 is None else float(h0)
    return _simulate(model, lambda t, h, d: np.full(h.shape, float(pi)), horizon, w0, h0,
                     check_state(d0, "d0"), check_positive_int(n_paths, "n_paths"), seed)


def crra_utility(log_wealth, gamma):
    """``W**gamma / gamma``; ruinous paths overflow to ``-inf`` for ``gamma < 0``."""
    with np.errstate(over="ignore"):
        return np.exp(gamma * log_wealth) / gamma


def _mean_and_se(v):
    if not np.all(np.isfinite(v)):
        return float(np.mean(v)), math.nan
    with np.errstate(over="ignore"):
        return float(v.mean()), float(np.std(v, ddof=1) / math.sqrt(v.size))


@dataclass
class BenchmarkArm:
    label: str
    mean_utility: float
    std_error: float
    diff_vs_policy: float
    diff_std_error: float
    dominated: bool


def policy_vs_constant_benchmarks(model, policy, constants=(0.0, 0.25, 0.5, 0.75, 1.0), n_paths=10000,
                                  seed=0, h0=None, d0=0, n_se=2.0):
    """Monte Carlo ``E[W_T**gamma / gamma]`` for the solved policy and fixed allocations.

    All arms share the random numbers. An arm counts as dominated when the
    policy's estimate is at least the arm's minus ``n_se`` standard errors
    of the paired difference.
    """
    gamma = model.utility.gamma
    T = policy.horizon
    sol = simulate_wealth(model, policy, 1.0, h0, d0, n_paths, seed)
    u_pol = crra_utility(sol.log_wealth[:, -1], gamma)
    mean_pol, se_pol = _mean_and_se(u_pol)
    arms = [BenchmarkArm("policy", mean_pol, se_pol, 0.0, 0.0, True)]
    for c in constants:
        ens = simulate_constant(model, c, T, 1.0, h0, d0, n_paths, seed)
        u = crra_utility(ens.log_wealth[:, -1], gamma)
        mean_arm, se_arm = _mean_and_se(u)
        if np.all(np.isfinite(u_pol)) and not np.all(np.isfinite(u)):
            # an arm with ruinous paths has estimated utility -inf
            diff_mean, diff_se, dominated = math.inf, math.nan, True
        else:
            diff_mean, diff_se = _mean_and_se(u_pol - u)
            dominated = bool(diff_mean >= -n_se * diff_se)
        arms.append(BenchmarkArm(f"constant {c:g}", mean_arm, se_arm, diff_mean, diff_se, dominated))
    return arms


def compare_leg_wealth(models, horizon=504, n_paths=2000, seed=0, n_h=200, d0=0, quad=None):
    """Solve and simulate each named leg; report median log-wealth paths and ordering.

    ``models`` maps a leg name (``winners``, ``losers``, ``momentum``) to a
    :class:`RegimeAllocationModel`. The returned dict carries per-leg
    quantile paths, terminal summaries and ``momentum_outperforms``: whether
    the momentum leg's median terminal log-wealth beats every other leg.
    """
    quad = quad or gauss_hermite_rule()
    out = {"legs": {}}
    for i, (name, model) in enumerate(models.items()):
        center = grid_center(model.state)
        sol = solve_bellman(model, log_grid(center, n_h), horizon, quad)
        ens = simulate_wealth(model, sol.policy, 1.0, center, d0, n_paths, [seed, i])
        out["legs"][name] = {
            "summary": ens.summary(),
            "quantiles": {str(q): v.tolist() for q, v in ens.quantile_paths().items()},
            "extrapolated": sol.extrapolated,
        }
    medians = {k: v["summary"]["median_terminal_log_wealth"] for k, v in out["legs"].items()}
    if "momentum" in medians:
        others = [v for k, v in medians.items() if k != "momentum"]
        out["momentum_outperforms"] = bool(all(medians["momentum"] > v for v in others))
    out["median_terminal_log_wealth"] = medians
    return out


def write_policy_csv(path, solution):
    """Columnar ``t, h, d, pi_star, J`` rows for ``t < T``."""
    grid = solution.value.grid.h_nodes
    P, J = solution.policy.pi_star, solution.value.J
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t", "h", "d", "pi_star", "J"))
        for t in range(P.shape[0]):
            for j, h in enumerate(grid):
                for d in (0, 1):
                    writer.writerow((t, repr(float(h)), d, repr(float(P[t, j, d])), repr(float(J[t, j, d]))))


class RegimeAllocator(BaseEstimator):
    """Estimator-style front end to :func:`solve_bellman`.

    ``fit`` solves the dynamic program for the configured model; ``predict``
    maps rows ``(h, d)`` or ``(t, h, d)`` to optimal allocations.
    """

    def __init__(self, omega=9.36e-6, alpha=0.8338, beta=0.4587, leverage=0.0, lambda0=0.3735,
                 lambda1=-0.5354, transition=((0.87, 0.13), (0.19, 0.81)), gamma=-5.0, risk_free=0.0,
                 horizon=504, n_h=200, span=50.0, n_quad=41, pi_search=101, floor=0.0):
        self.omega = omega
        self.alpha = alpha
        self.beta = beta
        self.leverage = leverage
        self.lambda0 = lambda0
        self.lambda1 = lambda1
        self.transition = transition
        self.gamma = gamma
        self.risk_free = risk_free
        self.horizon = horizon
        self.n_h = n_h
        self.span = span
        self.n_quad = n_quad
        self.pi_search = pi_search
        self.floor = floor

    def _model(self):
        return RegimeAllocationModel(
            GjrStateParams(self.omega, self.beta, self.alpha, self.leverage, self.floor),
            RegimePricing(self.lambda0, self.lambda1),
            TransitionMatrix(np.asarray(self.transition, dtype=float)),
            UtilitySpec(self.gamma, self.risk_free),
        )

    def fit(self, X=None, y=None):
        model = self._model()
        grid = log_grid(grid_center(model.state), self.n_h, self.span)
        self.solution_ = solve_bellman(model, grid, self.horizon, gauss_hermite_rule(self.n_quad), self.pi_search)
        self.model_ = model
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] == 2:
            t = np.zeros(X.shape[0], dtype=int)
            h, d = X[:, 0], X[:, 1]
        elif X.shape[1] == 3:
            t, h, d = X[:, 0].astype(int), X[:, 1], X[:, 2]
        else:
            raise ValueError("X must have columns (h, d) or (t, h, d)")
        pol = self.solution_.policy
        return np.array([pol.allocation(ti, hi, di) for ti, hi, di in zip(t, h, d)], dtype=float)

    def simulate(self, n_paths=1000, seed=None, h0=None, d0=0):
        check_is_fitted(self, "solution_")
        return simulate_wealth(self.model_, self.solution_.policy, 1.0, h0, d0, n_paths, seed)


def read_policy_csv(path):
    """Inverse of :func:`write_policy_csv`: ``(PolicySurface, J)`` with ``J`` for ``t < T``."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = rows[:, 0].astype(int)
    d = rows[:, 2].astype(int)
    h_nodes = np.unique(rows[:, 1])
    j = np.searchsorted(h_nodes, rows[:, 1])
    T = int(t.max()) + 1
    P = np.zeros((T, h_nodes.size, 2))
    J = np.zeros((T, h_nodes.size, 2))
    P[t, j, d] = rows[:, 3]
    J[t, j, d] = rows[:, 4]
    grid = StateGrid(h_nodes)
    return PolicySurface(P, grid), J
