"""Solvers for the even-integer closest-vector problem min_q ||b - q B||^2.

q ranges over even-integer row vectors, so with q = 2m the problem is a
closest-vector search on the lattice generated by the rows of 2B.  Four
routes are provided: exact depth-first sphere enumeration with radius
shrinking, an LLL-reduction-based approximation, plain Babai rounding, and
an exhaustive box search used as the test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alphabet import quantize_even_int, quantize_int

BRUTE_MAX_POINTS = 10**8


@dataclass(frozen=True)
class IlsProblem:
    """One even-integer least-squares instance."""

    b: np.ndarray  # target row vector, length ncols
    B: np.ndarray  # generator, K x ncols, rows span the search space

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).reshape(-1)
        B = np.asarray(self.B, dtype=float)
        if B.ndim != 2 or B.shape[1] != b.size:
            raise ValueError(f"b (len {b.size}) and B {B.shape} are not conformal")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(B))):
            raise ValueError("problem data must be finite")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "B", B)

    def cost(self, q) -> float:
        r = self.b - np.asarray(q, dtype=float) @ self.B
        return float(r @ r)


@dataclass(frozen=True)
class ReducedBasis:
    """LLL output: Bbar = original @ T with T unimodular."""

    bbar: np.ndarray  # reduced basis, vectors in columns
    t: np.ndarray     # integer transform, |det| = 1
    delta: float


@dataclass(frozen=True)
class IlsSolution:
    q: np.ndarray       # even-integer row vector
    cost: float
    exact: bool         # True only when enumeration provably finished
    nodes_visited: int


def _gram_schmidt(basis: np.ndarray):
    """Orthogonalization of the columns; returns (squared norms, mu).

    mu carries an implicit unit diagonal so that size-reduction updates can
    subtract whole rows.
    """
    n = basis.shape[1]
    ortho = np.zeros_like(basis)
    mu = np.eye(n)
    for i in range(n):
        v = basis[:, i].copy()
        for j in range(i):
            mu[i, j] = (basis[:, i] @ ortho[:, j]) / (ortho[:, j] @ ortho[:, j])
            v -= mu[i, j] * ortho[:, j]
        ortho[:, i] = v
    return np.sum(ortho**2, axis=0), mu


def lll_reduce(m, delta: float = 0.75) -> ReducedBasis:
    """Lovasz-reduce the columns of m, tracking the unimodular transform.

    Raises on linearly dependent columns.  Standard swap-based formulation;
    the Gram-Schmidt data is recomputed after swaps, which is cheap at the
    dimensions this package targets.
    """
    if not 0.25 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0.25, 1], got {delta}")
    basis = np.array(m, dtype=float)
    if basis.ndim != 2 or basis.shape[0] < basis.shape[1]:
        raise ValueError(f"basis must be tall or square, got shape {basis.shape}")
    n = basis.shape[1]
    t = np.eye(n, dtype=np.int64)
    norms, mu = _gram_schmidt(basis)
    if np.min(norms) <= 1e-24 * np.max(norms):
        raise ValueError("basis columns are linearly dependent")
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 100_000 * n * n:
            raise RuntimeError("reduction failed to terminate")
        for j in range(k - 1, -1, -1):
            c = round(mu[k, j])
            if c != 0:
                basis[:, k] -= c * basis[:, j]
                t[:, k] -= c * t[:, j]
                mu[k, : j + 1] -= c * mu[j, : j + 1]
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            basis[:, [k - 1, k]] = basis[:, [k, k - 1]]
            t[:, [k - 1, k]] = t[:, [k, k - 1]]
            norms, mu = _gram_schmidt(basis)
            k = max(k - 1, 1)
    return ReducedBasis(bbar=basis, t=t, delta=delta)


def babai_round(b, basis: ReducedBasis) -> np.ndarray:
    """Nearest-plane estimate of the coefficients of b in the original basis.

    Runs on the reduced basis and maps back through T, so for any lattice
    point the exact coefficients come out.
    """
    bbar = basis.bbar
    q, r = np.linalg.qr(bbar)
    target = q.T @ np.asarray(b, dtype=float).reshape(-1)
    n = bbar.shape[1]
    c = np.zeros(n, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        c[i] = round((target[i] - r[i, i + 1 :] @ c[i + 1 :]) / r[i, i])
    return basis.t @ c


def _qr_positive(mat):
    q, r = np.linalg.qr(mat)
    sgn = np.sign(np.diag(r))
    sgn[sgn == 0] = 1.0
    return q * sgn, (r.T * sgn).T


def _best_of(problem: IlsProblem, candidates, exact: bool, nodes: int) -> IlsSolution:
    costs = [problem.cost(q) for q in candidates]
    i = int(np.argmin(costs))
    return IlsSolution(
        q=np.asarray(candidates[i], dtype=np.int64),
        cost=costs[i],
        exact=exact,
        nodes_visited=nodes,
    )


def solve_sd(
    problem: IlsProblem,
    budget: int = 10**6,
    cache: ReducedBasis | None = None,
) -> IlsSolution:
    """Exact sphere search with Schnorr-Euchner ordering and radius shrinking.

    Substitutes q = 2m and enumerates m depth first on the QR factorization
    of the (optionally LLL-reduced) doubled generator, starting from the
    rounding estimate and visiting siblings in zig-zag order.  The zero
    vector is always a candidate, so cost <= ||b||^2.  If the node budget
    runs out the best point seen so far is returned with exact=False.

    cache, when given, must be the reduction of B transposed; it tightens
    the enumeration dramatically and is shared across all layers of one
    coherence interval.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    b, B = problem.b, problem.B
    K = B.shape[0]
    if cache is None:
        gen = 2.0 * B.T
        t = np.eye(K, dtype=np.int64)
    else:
        gen = 2.0 * cache.bbar
        t = cache.t
    q_mat, r_mat = _qr_positive(gen)
    v = q_mat.T @ b
    c0 = max(float(b @ b - v @ v), 0.0)  # out-of-span residual

    candidates = [np.zeros(K, dtype=np.int64)]
    # rounding warm start in reduced coordinates
    w0 = np.round(np.linalg.solve(r_mat, v)).astype(np.int64)
    candidates.append(2 * (t @ w0))
    if cache is not None:
        candidates.append(solve_lll(problem, cache).q)
    best_cost = min(problem.cost(q) for q in candidates)

    w, nodes, exact = _se_enumerate(v, r_mat, best_cost, c0, budget)
    if w is not None:
        candidates.append(2 * (t @ w))
    return _best_of(problem, candidates, exact, nodes)


def _se_enumerate(v, r_mat, best_cost, c0, budget):
    """Depth-first enumeration core; returns (best coeffs or None, nodes, exact)."""
    K = v.size
    diag = np.diag(r_mat)
    best_w = None
    m = np.zeros(K, dtype=np.int64)
    step = np.zeros(K, dtype=np.int64)
    dist = np.zeros(K + 1)
    partial = np.zeros((K, K))  # partial[i] = v minus contributions of levels > i
    nodes = 0
    k = K - 1
    partial[k] = v
    center = partial[k][k] / diag[k]
    m[k] = round(center)
    step[k] = 1 if center >= m[k] else -1
    exact = True
    while True:
        nodes += 1
        if nodes > budget:
            exact = False
            break
        d = partial[k][k] - diag[k] * m[k]
        nd = dist[k + 1] + d * d
        if nd + c0 < best_cost:
            if k == 0:
                best_cost = nd + c0
                best_w = m.copy()
                m[k] += step[k]
                step[k] = -step[k] - (1 if step[k] > 0 else -1)
            else:
                dist[k] = nd
                partial[k - 1] = partial[k] - m[k] * r_mat[:, k]
                k -= 1
                center = partial[k][k] / diag[k]
                m[k] = round(center)
                step[k] = 1 if center >= m[k] else -1
        else:
            if k == K - 1:
                break
            k += 1
            m[k] += step[k]
            step[k] = -step[k] - (1 if step[k] > 0 else -1)
    return best_w, nodes, exact


def solve_brute(problem: IlsProblem, bound: int = 8) -> IlsSolution:
    """Exhaustive oracle over even q with |q_i| <= bound.

    Refuses with a size estimate when the box holds more than
    BRUTE_MAX_POINTS points.  Exact within the box by construction.
    """
    b, B = problem.b, problem.B
    K = B.shape[0]
    top = bound - (bound % 2)
    values = np.arange(-top, top + 1, 2, dtype=np.int64)
    n_points = len(values) ** K
    if n_points > BRUTE_MAX_POINTS:
        raise ValueError(
            f"box search would visit {n_points:.3e} points"
            f" (limit {BRUTE_MAX_POINTS:.0e}); shrink bound or K"
        )
    tail = len(values) ** (K - 1)
    grids = np.meshgrid(*([values] * (K - 1)), indexing="ij") if K > 1 else []
    tail_pts = (
        np.stack([g.reshape(-1) for g in grids], axis=1)
        if K > 1
        else np.zeros((1, 0), dtype=np.int64)
    )
    best_cost = np.inf
    best_q = None
    for v0 in values:
        qs = np.empty((tail, K), dtype=np.int64)
        qs[:, 0] = v0
        if K > 1:
            qs[:, 1:] = tail_pts
        resid = b[None, :] - qs @ B
        costs = np.einsum("ij,ij->i", resid, resid)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost = float(costs[i])
            best_q = qs[i].copy()
    return IlsSolution(q=best_q, cost=best_cost, exact=True, nodes_visited=n_points)


def _unreduced_estimate(problem: IlsProblem) -> np.ndarray:
    """Round-then-snap estimate without any basis reduction."""
    z = quantize_int(np.linalg.pinv(problem.B.T) @ problem.b)
    return quantize_even_int(z.astype(float))


def solve_lll(problem: IlsProblem, cache: ReducedBasis) -> IlsSolution:
    """Reduction-based approximation without any enumeration: round in
    reduced unit-lattice coordinates, map back through T, snap to even
    integers.

    The returned point is the best of that two-step estimate, the same
    estimate without reduction, and zero, so the cost never exceeds the
    trivial baseline.  Snapping to the even integers only after the
    unit-lattice rounding costs real accuracy (on square problems the
    unit-lattice optimum is -tau * delta_k, which snaps to zero), which is
    precisely the gap the exact sphere search closes.
    """
    b, B = problem.b, problem.B
    K = B.shape[0]
    bbar_pinv = np.linalg.pinv(cache.bbar)
    z = quantize_int(bbar_pinv @ b)
    q_round = quantize_even_int((cache.t @ z).astype(float))
    zero = np.zeros(K, dtype=np.int64)
    return _best_of(
        problem, [q_round, _unreduced_estimate(problem), zero], exact=False, nodes=0
    )


def solve_babai(problem: IlsProblem, cache: ReducedBasis | None = None) -> IlsSolution:
    """Rounding-only route: the unreduced estimate or zero."""
    zero = np.zeros(problem.B.shape[0], dtype=np.int64)
    return _best_of(problem, [_unreduced_estimate(problem), zero], exact=False, nodes=0)
