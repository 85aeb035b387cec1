"""Geometric programming over positive variables.

Monomial/posynomial algebra plus a self-contained solver: under the
log-variable substitution y = ln x every posynomial constraint becomes a
convex log-sum-exp function, and the solver runs a standard log-barrier
scheme with damped Newton steps and backtracking line search. A phase-I
min-slack subproblem decides feasibility and produces the strictly
feasible starting point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from numbers import Real
from typing import Mapping

import numpy as np

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 200
FEASIBILITY_TOL = 1e-6

_BARRIER_MU = 20.0
_NEWTON_TOL = 1e-11
_MAX_NEWTON = 80


@dataclass(frozen=True)
class Monomial:
    """c * prod_v x_v^a_v with a positive coefficient."""

    coefficient: float
    exponents: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.coefficient > 0 and math.isfinite(self.coefficient)):
            raise ValueError(f"monomial coefficient must be positive, got {self.coefficient}")
        exps = {v: float(a) for v, a in self.exponents.items() if a != 0.0}
        object.__setattr__(self, "exponents", exps)

    def __mul__(self, other):
        if isinstance(other, Monomial):
            exps = dict(self.exponents)
            for v, a in other.exponents.items():
                exps[v] = exps.get(v, 0.0) + a
            return Monomial(self.coefficient * other.coefficient, exps)
        if isinstance(other, Real):
            return Monomial(self.coefficient * float(other), self.exponents)
        if isinstance(other, Posynomial):
            return Posynomial(tuple(self * t for t in other.terms))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Monomial):
            return self * other ** -1.0
        if isinstance(other, Real):
            return Monomial(self.coefficient / float(other), self.exponents)
        return NotImplemented

    def __pow__(self, power: float):
        return Monomial(self.coefficient ** power,
                        {v: a * power for v, a in self.exponents.items()})

    def __add__(self, other):
        return Posynomial.of(self) + other

    __radd__ = __add__

    def evaluate(self, values: Mapping[str, float]) -> float:
        out = self.coefficient
        for v, a in self.exponents.items():
            out *= float(values[v]) ** a
        return out

    def variables(self) -> set:
        return set(self.exponents)


def monomial(coefficient: float = 1.0, **exponents) -> Monomial:
    """Convenience constructor: monomial(2.0, x=1, y=-1) is 2 x / y."""
    return Monomial(float(coefficient), exponents)


@dataclass(frozen=True)
class Posynomial:
    """Sum of monomials; closed under addition and monomial multiplication."""

    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a posynomial needs at least one term")
        if not all(isinstance(t, Monomial) for t in self.terms):
            raise TypeError("posynomial terms must be monomials")

    @classmethod
    def of(cls, *parts) -> "Posynomial":
        terms = []
        for p in parts:
            if isinstance(p, Posynomial):
                terms.extend(p.terms)
            elif isinstance(p, Monomial):
                terms.append(p)
            elif isinstance(p, Real):
                terms.append(Monomial(float(p)))
            else:
                raise TypeError(f"cannot build a posynomial from {type(p)}")
        return cls(tuple(terms))

    def __add__(self, other):
        if isinstance(other, (Posynomial, Monomial, Real)):
            return Posynomial.of(self, other)
        return NotImplemented

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, (Monomial, Real)):
            return Posynomial(tuple(t * other for t in self.terms))
        if isinstance(other, Posynomial):
            return Posynomial(tuple(a * b for a in self.terms for b in other.terms))
        return NotImplemented

    __rmul__ = __mul__

    def evaluate(self, values: Mapping[str, float]) -> float:
        return sum(t.evaluate(values) for t in self.terms)

    def variables(self) -> set:
        out = set()
        for t in self.terms:
            out |= t.variables()
        return out

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1


class GpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITER_LIMIT = "iter_limit"


@dataclass(frozen=True)
class GpSolution:
    values: dict
    objective_value: float
    status: GpStatus
    barrier_objectives: tuple = ()


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    min_slack: float
    witness: dict


@dataclass(frozen=True, eq=False)
class GeometricProgram:
    """minimize objective s.t. constraint posynomials <= 1, within bounds.

    Every variable must carry positive (lower, upper) bounds; the bounds
    are folded into the constraint set as monomials, which keeps the
    feasible region compact and the barrier well defined.
    """

    objective: Posynomial
    constraints: tuple = ()
    bounds: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        obj = self.objective
        if isinstance(obj, Monomial):
            obj = Posynomial.of(obj)
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            if not isinstance(c, Posynomial):
                raise TypeError("constraints must be posynomials (meaning <= 1)")
        for v, (lo, hi) in self.bounds.items():
            if not (0 < lo <= hi):
                raise ValueError(f"bounds for {v} must satisfy 0 < lower <= upper")
        free = self.variables() - set(self.bounds)
        if free:
            raise ValueError(f"unbounded variables: {sorted(free)}")

    def variables(self) -> set:
        out = self.objective.variables()
        for c in self.constraints:
            out |= c.variables()
        return out


# ---------------------------------------------------------------------------
# log-space compilation and barrier solver


class _LogProgram:
    """Log-space image of a GP: objective and constraints as (A, b) pairs
    representing y -> logsumexp(A y + b)."""

    def __init__(self, gp: GeometricProgram):
        self.names = sorted(gp.variables() | set(gp.bounds))
        self.index = {v: i for i, v in enumerate(self.names)}
        self.n = len(self.names)
        self.obj = self._compile(gp.objective)
        cons = [self._compile(c) for c in gp.constraints]
        for v, (lo, hi) in sorted(gp.bounds.items()):
            j = self.index[v]
            row = np.zeros((1, self.n))
            row[0, j] = 1.0
            cons.append((row, np.array([-math.log(hi)])))       # x / hi <= 1
            row = np.zeros((1, self.n))
            row[0, j] = -1.0
            cons.append((row, np.array([math.log(lo)])))        # lo / x <= 1
        self.cons = cons
        self.n_user_cons = len(gp.constraints)
        self.mid = np.array([(math.log(lo) + math.log(hi)) / 2.0
                             for v, (lo, hi) in sorted(gp.bounds.items())])

    def _compile(self, p: Posynomial):
        A = np.zeros((len(p.terms), self.n))
        b = np.empty(len(p.terms))
        for i, t in enumerate(p.terms):
            b[i] = math.log(t.coefficient)
            for v, a in t.exponents.items():
                A[i, self.index[v]] = a
        return A, b

    def point(self, y: np.ndarray) -> dict:
        return {v: math.exp(y[self.index[v]]) for v in self.names}


def _lse(A, b, y):
    """Value, gradient and Hessian of logsumexp(A y + b)."""
    z = A @ y + b
    zmax = z.max()
    w = np.exp(z - zmax)
    s = w.sum()
    p = w / s
    g = A.T @ p
    H = (A * p[:, None]).T @ A - np.outer(g, g)
    return zmax + math.log(s), g, H


def _lse_value(A, b, y):
    z = A @ y + b
    zmax = z.max()
    return zmax + math.log(np.exp(z - zmax).sum())


def _barrier_value(lp, t, y):
    val = t * _lse_value(*lp.obj, y)
    for A, b in lp.cons:
        g = _lse_value(A, b, y)
        if g >= 0:
            return math.inf
        val -= math.log(-g)
    return val


def _newton(lp, t, y):
    n = lp.n
    for _ in range(_MAX_NEWTON):
        f0, g0, H0 = _lse(*lp.obj, y)
        grad = t * g0
        hess = t * H0
        for A, b in lp.cons:
            gi, gg, gh = _lse(A, b, y)
            if gi >= 0:
                raise FloatingPointError("barrier left the feasible region")
            grad += -gg / gi
            hess += np.outer(gg, gg) / gi**2 - gh / gi
        hess[np.diag_indices(n)] += 1e-12 * (1.0 + np.abs(np.diag(hess)))
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = -grad
        decrement = -grad @ step
        if decrement <= 0:
            step = -grad
            decrement = grad @ grad
        if decrement / 2.0 <= _NEWTON_TOL:
            break
        base = _barrier_value(lp, t, y)
        a = 1.0
        while a > 1e-14:
            cand = y + a * step
            if _barrier_value(lp, t, cand) <= base - 0.25 * a * decrement:
                y = cand
                break
            a *= 0.5
        else:
            break
    return y


def _solve_barrier(lp, y0, tol, max_iters):
    """Central-path sweep; returns (y, objective history, hit_limit)."""
    m = len(lp.cons)
    t = 1.0
    y = y0
    history = []
    for _ in range(max_iters):
        y = _newton(lp, t, y)
        history.append(_lse_value(*lp.obj, y))
        if m / t <= tol:
            return y, history, False
        t *= _BARRIER_MU
    return y, history, True


class _Phase1Program:
    """Min-slack problem: minimize s subject to g_i(y) <= s inside bounds."""

    def __init__(self, lp: _LogProgram):
        self.n = lp.n + 1
        slack = lp.n
        obj_A = np.zeros((1, self.n))
        obj_A[0, slack] = 1.0
        self.obj = (obj_A, np.zeros(1))
        cons = []
        for i, (A, b) in enumerate(lp.cons):
            Ae = np.zeros((A.shape[0], self.n))
            Ae[:, :lp.n] = A
            if i < lp.n_user_cons:
                Ae[:, slack] = -1.0                 # g_i(y) - s <= 0
            cons.append((Ae, b))
        self.cons = cons
        self.n_user_cons = lp.n_user_cons


def _phase1(lp: _LogProgram, tol=1e-9, max_iters=DEFAULT_MAX_ITERS):
    """Strictly feasible point search; returns (y, min_slack_log)."""
    if lp.n_user_cons == 0:
        return lp.mid, -math.inf
    p1 = _Phase1Program(lp)
    worst = max(_lse_value(A, b, lp.mid) for A, b in lp.cons[:lp.n_user_cons])
    z = np.concatenate([lp.mid, [worst + 1.0]])
    z, _, _ = _solve_barrier(p1, z, tol, max_iters)
    return z[:lp.n], float(z[lp.n])


def gp_feasible(gp: GeometricProgram) -> FeasibilityReport:
    """Phase-I feasibility: true iff the posynomial min-slack value is <= 1."""
    lp = _LogProgram(gp)
    y, slack_log = _phase1(lp)
    min_slack = math.exp(slack_log) if math.isfinite(slack_log) else 0.0
    return FeasibilityReport(feasible=min_slack <= 1.0 + FEASIBILITY_TOL,
                             min_slack=min_slack,
                             witness=lp.point(y))


def _strictly_feasible(lp, y, margin=1e-12) -> bool:
    return all(_lse_value(A, b, y) < -margin for A, b in lp.cons)


def solve_gp(gp: GeometricProgram,
             tol: float = DEFAULT_TOL,
             max_iters: int = DEFAULT_MAX_ITERS,
             start: Mapping[str, float] | None = None) -> GpSolution:
    """Solve a GP to the requested relative objective tolerance.

    ``start`` may supply a warm-start point (used only when it is strictly
    feasible); otherwise phase I runs first. The returned barrier
    objective history is nonincreasing along the central path.
    """
    lp = _LogProgram(gp)
    y = None
    if start is not None:
        cand = np.array([math.log(start[v]) for v in lp.names])
        if _strictly_feasible(lp, cand):
            y = cand
    if y is None:
        y, slack_log = _phase1(lp)
        if slack_log >= -1e-9:
            return GpSolution(values=lp.point(y), objective_value=math.nan,
                              status=GpStatus.INFEASIBLE)
    y, history, hit_limit = _solve_barrier(lp, y, tol, max_iters)
    values = lp.point(y)
    status = GpStatus.ITER_LIMIT if hit_limit else GpStatus.OPTIMAL
    if status is GpStatus.OPTIMAL:
        for c in gp.constraints:
            if c.evaluate(values) > 1.0 + FEASIBILITY_TOL:
                status = GpStatus.ITER_LIMIT
                break
    return GpSolution(values=values,
                      objective_value=gp.objective.evaluate(values),
                      status=status,
                      barrier_objectives=tuple(math.exp(h) for h in history))
