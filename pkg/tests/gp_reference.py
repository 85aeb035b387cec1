"""Shared GP test references: random instance generator and an exhaustive
log-space grid-search oracle, independent of the solver internals."""
import math

import numpy as np

from relaylab import GeometricProgram, Monomial, Posynomial


def random_gp(rng, max_vars=3) -> GeometricProgram:
    n_vars = int(rng.integers(1, max_vars + 1))
    names = [f"x{i}" for i in range(n_vars)]
    bounds = {}
    for v in names:
        lo = 10.0 ** rng.uniform(-1.0, 0.3)
        hi = lo * 10.0 ** rng.uniform(0.4, 0.9)
        bounds[v] = (lo, hi)

    def random_posy(n_terms):
        terms = []
        for _ in range(n_terms):
            exps = {v: float(rng.uniform(-2, 2)) for v in names if rng.uniform() < 0.8}
            terms.append(Monomial(float(10.0 ** rng.uniform(-1, 1)), exps))
        return Posynomial(tuple(terms))

    objective = random_posy(int(rng.integers(1, 4)))
    anchor = {v: math.sqrt(lo * hi) for v, (lo, hi) in bounds.items()}
    constraints = []
    for _ in range(int(rng.integers(0, 4))):
        p = random_posy(int(rng.integers(1, 3)))
        # normalise so the box midpoint stays feasible with margin
        constraints.append(p * (1.0 / (p.evaluate(anchor) * float(rng.uniform(1.5, 4.0)))))
    return GeometricProgram(objective=objective, constraints=constraints, bounds=bounds)


def grid_search(gp: GeometricProgram, coarse=1e-2, fine=1e-3):
    """Two-stage log-space grid search: a coarse pass at ``coarse`` decades,
    then a ``fine``-decade refinement around the coarse winner (sound
    because the log-space problem is convex, so the basin is unique).
    Returns the best feasible objective value, or None if no grid point is
    feasible."""
    names = sorted(gp.bounds)

    def axis(lo, hi, step):
        n = max(2, int(round((math.log10(hi) - math.log10(lo)) / step)) + 1)
        return np.logspace(math.log10(lo), math.log10(hi), n)

    def best_on(axes):
        grids = np.meshgrid(*axes, indexing="ij")
        values = {v: g.ravel() for v, g in zip(names, grids)}
        obj = np.zeros(grids[0].size)
        for t in gp.objective.terms:
            term = np.full(grids[0].size, t.coefficient)
            for v, a in t.exponents.items():
                term = term * values[v] ** a
            obj += term
        ok = np.ones(grids[0].size, dtype=bool)
        for c in gp.constraints:
            cv = np.zeros(grids[0].size)
            for t in c.terms:
                term = np.full(grids[0].size, t.coefficient)
                for v, a in t.exponents.items():
                    term = term * values[v] ** a
                cv += term
            ok &= cv <= 1.0 + 1e-9
        if not ok.any():
            return None, None
        obj = np.where(ok, obj, np.inf)
        idx = int(np.argmin(obj))
        return obj[idx], {v: values[v][idx] for v in names}

    val, point = best_on([axis(*gp.bounds[v], coarse) for v in names])
    if point is None:
        return None
    axes = []
    for v in names:
        lo, hi = gp.bounds[v]
        c = point[v]
        axes.append(axis(max(lo, c * 10 ** (-2 * coarse)),
                         min(hi, c * 10 ** (2 * coarse)), fine))
    fine_val, _ = best_on(axes)
    return min(val, fine_val)
