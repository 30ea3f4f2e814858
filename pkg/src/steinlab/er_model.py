"""Fixed-edge-count random graph: exact moments, the redistribution coupling,
and exact/Monte-Carlo checkers for the isolated-vertex count.

A graph on n vertices with exactly m edges is encoded by a permutation pi of
the N = C(n,2) unordered-pair slots; the edges are the slots pi(1..m).  The
coupling removes a chosen vertex and relocates its incident edges uniformly
onto free slots, producing a graph on n-1 vertices with the same edge count.

Exhaustive checkers integrate over edge sets directly (the permutation only
matters through the edge set) and over relocation-target subsets (the
candidate stream only matters through the set of accepted slots); both
reductions are exercised against the literal constructions in the tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exactnum import FLOAT_SLACK, binomial, phi
from .stein_core import DiscreteLaw, empirical_kolmogorov, law_from_pairs

DEFAULT_THRESHOLDS = {"n_bar": 344, "m_bar": 28, "c_bar": 1}


@dataclass(frozen=True)
class ErParams:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("need n >= 3")
        if not 0 < self.m < binomial(self.n, 2):
            raise ValueError("need 0 < m < C(n,2)")

    @property
    def slots(self) -> int:
        return binomial(self.n, 2)


def edge_index(v: int, w: int, n: int) -> int:
    """1-based slot of the pair {v, w} in the row-major pair enumeration."""
    if not 1 <= v < w <= n:
        raise ValueError("need 1 <= v < w <= n")
    return (v - 1) * n - v * (v - 1) // 2 + (w - v)


def slot_to_pair(i: int, n: int) -> tuple[int, int]:
    """Inverse of edge_index; returns (v, w) with v < w."""
    N = binomial(n, 2)
    if not 1 <= i <= N:
        raise ValueError("slot index out of range")
    v = 1
    while i > n - v:
        i -= n - v
        v += 1
    return v, v + i


@lru_cache(maxsize=None)
def pair_table(n: int) -> tuple[tuple[int, int], ...]:
    """pair_table(n)[i-1] = slot_to_pair(i, n), materialized once."""
    return tuple((v, w) for v in range(1, n) for w in range(v + 1, n + 1))


@dataclass(frozen=True)
class ErGraphState:
    params: ErParams
    perm: tuple  # pi as 1-based tuple: perm[j] = pi(j+1)

    def edge_slots(self) -> frozenset:
        return frozenset(self.perm[: self.params.m])


def sample_graph(params: ErParams, rng: np.random.Generator) -> ErGraphState:
    perm = tuple(int(x) + 1 for x in rng.permutation(params.slots))
    return ErGraphState(params, perm)


def degrees(graph: ErGraphState) -> list[int]:
    n = graph.params.n
    table = pair_table(n)
    deg = [0] * (n + 1)
    for slot in graph.edge_slots():
        v, w = table[slot - 1]
        deg[v] += 1
        deg[w] += 1
    return deg[1:]


def isolated_count(graph: ErGraphState) -> int:
    return sum(1 for d in degrees(graph) if d == 0)


# ---------------------------------------------------------------------------
# Exact and asymptotic moments, rate function, parameter region
# ---------------------------------------------------------------------------


def exact_moments(params: ErParams) -> tuple[Fraction, Fraction]:
    """Exact (mean, variance) of the isolated-vertex count."""
    n, m, N = params.n, params.m, params.slots
    denom = binomial(N, m)
    mu = Fraction(n * binomial(N - (n - 1), m), denom)
    pair = Fraction(n * (n - 1) * binomial(N - (2 * n - 3), m), denom)
    return mu, mu + pair - mu * mu


def asymptotic_moments(params: ErParams) -> tuple[float, float]:
    """(n e^(-2m/n), n phi(2m/n)) - the large-graph approximations."""
    x = 2.0 * params.m / params.n
    return params.n * math.exp(-x), params.n * phi(x)


def asymptotic_accuracy(params: ErParams) -> dict:
    """Measured relative errors of the approximations, normalized by the
    error profiles m/n^2 + m^2/n^3 (mean) and 1/m + m^2/n^3 (variance)."""
    mu, s2 = exact_moments(params)
    mu_a, s2_a = asymptotic_moments(params)
    n, m = params.n, params.m
    mu_err = abs(float(mu) / mu_a - 1.0)
    out = {"mu_rel_err": mu_err, "mu_measured_const": mu_err / (m / n**2 + m**2 / n**3)}
    if s2_a > 0:
        s2_err = abs(float(s2) / s2_a - 1.0)
        out["sigma2_rel_err"] = s2_err
        out["sigma2_measured_const"] = s2_err / (1 / m + m**2 / n**3)
    return out


def rate(params: ErParams) -> float:
    """sigma^3 / (mu (1 + m^2/n^2)); zero in the degenerate variance case."""
    mu, s2 = exact_moments(params)
    if s2 == 0:
        return 0.0
    return float(s2) ** 1.5 / (float(mu) * (1.0 + (params.m / params.n) ** 2))


def in_parameter_region(params: ErParams, thresholds: dict | None = None) -> bool:
    """n >= n_bar and m_bar <= m <= c_bar n^(3/2), compared exactly."""
    th = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        th.update(thresholds)
    n, m = params.n, params.m
    c_bar = Fraction(th["c_bar"])
    # m <= c_bar n^(3/2)  <=>  m^2 <= c_bar^2 n^3 for nonnegative sides
    return n >= th["n_bar"] and th["m_bar"] <= m and Fraction(m) ** 2 <= c_bar**2 * n**3


def truncation_level(params: ErParams) -> float:
    """Degree level min(n, m)/4 separating the typical-degree event."""
    return min(params.n, params.m) / 4.0


def truncation_exceeded(params: ErParams, degree: int) -> bool:
    """Diagnostic predicate for tallying the atypically-high-degree event;
    never used to alter sampling."""
    return degree > truncation_level(params)


def domain_label(params: ErParams) -> str:
    """Descriptive edge-density regime: m/n below 1/4, above 4, or central."""
    ratio = params.m / params.n
    if ratio < 0.25:
        return "left"
    if ratio > 4.0:
        return "right"
    return "central"


# ---------------------------------------------------------------------------
# The redistribution coupling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RedistributionResult:
    coupled_degrees: dict  # degree of each w != v in the coupled graph
    relocated_slots: frozenset
    receiving_vertices: frozenset
    lost_neighbors: frozenset
    b_v: int


def lazy_permutation(rng: np.random.Generator, N: int) -> Iterator[int]:
    """Uniform permutation of 1..N, materializing only the consumed prefix."""
    vals: dict[int, int] = {}
    for i in range(N):
        j = int(rng.integers(i, N))
        out = vals.get(j, j)
        vals[j] = vals.get(i, i)
        yield out + 1


def redistribute(graph: ErGraphState, v: int, sigma_v: Iterable[int]) -> RedistributionResult:
    """Remove vertex v and relocate its edges onto candidate slots.

    ``sigma_v`` is consumed in order; a candidate slot is accepted when it is
    not incident to v and not already an edge.  Deterministic given the graph
    and the candidate sequence.
    """
    params = graph.params
    n, m = params.n, params.m
    if m > binomial(n - 1, 2):
        raise ValueError("redistribution cannot terminate: m > C(n-1, 2)")
    table = pair_table(n)
    edges = graph.edge_slots()
    deg = degrees(graph)
    d_v = deg[v - 1]

    relocated = set()
    it = iter(sigma_v)
    while len(relocated) < d_v:
        slot = next(it)
        a, b = table[slot - 1]
        if v == a or v == b:
            continue
        if slot in edges:
            continue
        relocated.add(slot)

    kept = [s for s in edges if v not in table[s - 1]]
    coupled_deg = {w: 0 for w in range(1, n + 1) if w != v}
    for s in itertools.chain(kept, relocated):
        a, b = table[s - 1]
        coupled_deg[a] += 1
        coupled_deg[b] += 1

    receiving = frozenset(w for s in relocated for w in table[s - 1])
    neighbors = {w for s in edges for w in table[s - 1] if v in table[s - 1] and w != v}
    lost = frozenset(neighbors - receiving)

    y = sum(1 for d in deg if d == 0)
    y_v = sum(1 for d in coupled_deg.values() if d == 0)
    return RedistributionResult(
        coupled_degrees=coupled_deg,
        relocated_slots=frozenset(relocated),
        receiving_vertices=receiving,
        lost_neighbors=lost,
        b_v=y - y_v,
    )


def b_v_decomposition(graph: ErGraphState, v: int, result: RedistributionResult) -> int:
    """I_v + sum over receiving vertices of I_w - sum over lost neighbors of
    I[d_w = 1], asserted equal to the direct recount difference."""
    deg = degrees(graph)
    value = (
        (1 if deg[v - 1] == 0 else 0)
        + sum(1 for w in result.receiving_vertices if deg[w - 1] == 0)
        - sum(1 for w in result.lost_neighbors if deg[w - 1] == 1)
    )
    if value != result.b_v:
        raise RuntimeError(
            f"decomposition {value} != direct difference {result.b_v}; coupling bug"
        )
    return value


class DegenerateParamsError(ValueError):
    pass


@dataclass(frozen=True)
class ErCouplingSample:
    w: float
    w_prime: float
    g: float
    d: float
    chosen_vertex: int
    chosen_degree: int


def coupling_sample(params: ErParams, rng: np.random.Generator) -> ErCouplingSample:
    """One standardized draw (W, W', G, D) from the coupling construction."""
    mu, s2 = exact_moments(params)
    if s2 == 0:
        raise DegenerateParamsError(f"sigma^2 = 0 at {params}")
    sigma = float(s2) ** 0.5
    graph = sample_graph(params, rng)
    v = int(rng.integers(1, params.n + 1))
    res = redistribute(graph, v, lazy_permutation(rng, params.slots))
    y = isolated_count(graph)
    y_v = y - res.b_v
    d_v = degrees(graph)[v - 1]
    w = (y - float(mu)) / sigma
    w_prime = (y_v - float(mu)) / sigma
    g = -(params.n / sigma) * ((1 if d_v == 0 else 0) - float(mu) / params.n)
    return ErCouplingSample(w, w_prime, g, w_prime - w, v, d_v)


# ---------------------------------------------------------------------------
# Exhaustive enumeration machinery
# ---------------------------------------------------------------------------

ENUMERATION_LIMIT = 200_000


def enumerate_edge_sets(params: ErParams) -> Iterator[tuple]:
    """All C(N, m) edge-slot subsets, each equally likely under the model."""
    total = binomial(params.slots, params.m)
    if total > ENUMERATION_LIMIT:
        raise ValueError(f"C(N,m) = {total} exceeds the enumeration limit")
    return itertools.combinations(range(1, params.slots + 1), params.m)


def _degrees_of_edges(edges: Sequence[int], table, n: int) -> list[int]:
    deg = [0] * (n + 1)
    for s in edges:
        a, b = table[s - 1]
        deg[a] += 1
        deg[b] += 1
    return deg[1:]


def exact_y_law(params: ErParams) -> DiscreteLaw:
    """Exact law of the isolated-vertex count by edge-set enumeration."""
    table = pair_table(params.n)
    weight = Fraction(1, binomial(params.slots, params.m))
    acc: dict[int, Fraction] = {}
    for edges in enumerate_edge_sets(params):
        y = sum(1 for d in _degrees_of_edges(edges, table, params.n) if d == 0)
        acc[y] = acc.get(y, Fraction(0)) + weight
    return law_from_pairs(acc.items())


def exact_w_law(params: ErParams) -> DiscreteLaw:
    """Law of W = (Y - mu)/sigma as float atoms with exact probabilities."""
    mu, s2 = exact_moments(params)
    if s2 == 0:
        raise DegenerateParamsError(f"sigma^2 = 0 at {params}")
    sigma = float(s2) ** 0.5
    y_law = exact_y_law(params)
    return DiscreteLaw(tuple(((y - float(mu)) / sigma, p) for y, p in y_law.atoms))


def relocation_target_law(edges: frozenset, v: int, params: ErParams):
    """Uniform law of the accepted-slot set: all d_v-subsets of free slots.

    The candidate stream visits free slots in uniform random order, so the
    accepted set is a uniform d_v-subset of the slots neither incident to v
    nor already occupied.
    """
    table = pair_table(params.n)
    d_v = sum(1 for s in edges if v in table[s - 1])
    allowed = [
        s for s in range(1, params.slots + 1) if v not in table[s - 1] and s not in edges
    ]
    count = binomial(len(allowed), d_v)
    w = Fraction(1, count)
    for subset in itertools.combinations(allowed, d_v):
        yield frozenset(subset), w


def _coupled_isolated(edges: frozenset, v: int, relocated: frozenset, table, n: int) -> int:
    kept = [s for s in edges if v not in table[s - 1]]
    deg = _degrees_of_edges(list(kept) + list(relocated), table, n)
    return sum(1 for w in range(1, n + 1) if w != v and deg[w - 1] == 0)


def check_stein_identity_exhaustive(params: ErParams, coeffs: Sequence) -> dict:
    """Exact coupling identity E[G(f(Y') - f(Y))] = E[(Y - mu) f(Y)].

    Works on the unstandardized count with G = -(n I_V - mu); ``coeffs`` are
    the polynomial coefficients of f, lowest degree first.  Enumerates edge
    sets, the chosen vertex, and relocation-target subsets with exact
    weights; reports exact rational equality.
    """
    mu, s2 = exact_moments(params)
    if s2 == 0:
        return {"skipped": True, "reason": "sigma^2 = 0 (degenerate parameters)"}
    if params.n > 5:
        raise ValueError("exhaustive check kept feasible only for n <= 5")
    coeffs = [Fraction(c) for c in coeffs]

    def f(y):
        return sum(c * Fraction(y) ** k for k, c in enumerate(coeffs))

    table = pair_table(params.n)
    n = params.n
    w_edges = Fraction(1, binomial(params.slots, params.m))
    lhs = Fraction(0)
    rhs = Fraction(0)
    for edges in enumerate_edge_sets(params):
        edges = frozenset(edges)
        deg = _degrees_of_edges(sorted(edges), table, n)
        y = sum(1 for d in deg if d == 0)
        fy = f(y)
        rhs += w_edges * (y - mu) * fy
        for v in range(1, n + 1):
            g = mu - n * (1 if deg[v - 1] == 0 else 0)
            inner = Fraction(0)
            for relocated, w_sub in relocation_target_law(edges, v, params):
                y_v = _coupled_isolated(edges, v, relocated, table, n)
                inner += w_sub * (f(y_v) - fy)
            lhs += w_edges * Fraction(1, n) * g * inner
    return {"lhs": lhs, "rhs": rhs, "equal": lhs == rhs, "skipped": False}


# ---------------------------------------------------------------------------
# Inequality checkers
# ---------------------------------------------------------------------------


def check_negative_correlation(params: ErParams) -> dict:
    """Joint isolation probability below the product, and the variance caps
    sigma^2 <= mu and sigma^2 <= 2m, all in exact arithmetic."""
    n, m, N = params.n, params.m, params.slots
    denom = binomial(N, m)
    joint = Fraction(binomial(N - (2 * n - 3), m), denom)
    single = Fraction(binomial(N - (n - 1), m), denom)
    mu, s2 = exact_moments(params)
    return {
        "joint": joint,
        "product": single * single,
        "holds": joint <= single * single,
        "variance_caps": s2 <= mu and s2 <= 2 * m,
    }


def check_moment_sandwich(params: ErParams) -> dict:
    """Exponential sandwiches for mu/n and the variance, for n >= 6 and
    m <= n^2/4 - 3n/2."""
    n, m = params.n, params.m
    if n < 6 or m > n * n / 4 - 1.5 * n:
        return {"applicable": False}
    mu, s2 = exact_moments(params)
    mu_f, s2_f = float(mu), float(s2)
    x = 2.0 * m / n
    corr = m * (m + n) / n**3
    mu_lo = math.exp(-x - 8 * corr)
    mu_hi = math.exp(-x)
    holds_mu = mu_lo <= mu_f / n + FLOAT_SLACK and mu_f / n <= mu_hi + FLOAT_SLACK

    s2_lo = mu_f * (1 - mu_f / n * (1 + x + 78 * corr))
    s2_hi = mu_f * (1 - mu_f / n * (1 + x - 48 * corr))
    holds_sigma = s2_lo <= s2_f + 1e-10 and s2_f <= s2_hi + 1e-10
    return {"applicable": True, "holds_mu": holds_mu, "holds_sigma": holds_sigma}


def check_moment_drop_ratios(
    params: ErParams, d: int, thresholds: dict | None = None, ceiling: float = 16.0
) -> dict:
    """Squared mean/variance ratios between (n, m) and (n-1, m-d)."""
    if not in_parameter_region(params, thresholds):
        raise ValueError(f"{params} outside the configured parameter region")
    if not 0 <= d <= min(params.n, params.m) / 4:
        raise ValueError("need 0 <= d <= min(n, m)/4")
    mu, s2 = exact_moments(params)
    mu_s, s2_s = exact_moments(ErParams(params.n - 1, params.m - d))
    if mu_s == 0 or s2_s == 0 or s2 == 0:
        raise ValueError("degenerate moments in the ratio")
    mean_ratio = float(max(mu**2 / mu_s**2, mu_s**2 / mu**2))
    var_ratio = float(max(s2 / s2_s, s2_s / s2))
    return {
        "mean_ratio": mean_ratio,
        "var_ratio": var_ratio,
        "below_ceiling": mean_ratio <= ceiling and var_ratio <= ceiling,
    }


# ---------------------------------------------------------------------------
# Monte Carlo estimators
# ---------------------------------------------------------------------------


def _sample_distinct_rows(rng: np.random.Generator, N: int, m: int, rows: int) -> np.ndarray:
    """(rows, m) array of distinct slot draws, uniform over ordered tuples.

    Per-entry rejection: duplicates after their first occurrence are redrawn
    until every row is duplicate-free, which reproduces sequential
    draw-until-new sampling.
    """
    out = rng.integers(0, N, size=(rows, m), dtype=np.int64)
    while True:
        order = np.argsort(out, axis=1, kind="stable")
        svals = np.take_along_axis(out, order, axis=1)
        eq = svals[:, 1:] == svals[:, :-1]
        if not eq.any():
            return out
        dup_sorted = np.concatenate([np.zeros((rows, 1), dtype=bool), eq], axis=1)
        dup = np.zeros_like(out, dtype=bool)
        np.put_along_axis(dup, order, dup_sorted, axis=1)
        out[dup] = rng.integers(0, N, size=int(dup.sum()))


def sample_isolated_counts(
    params: ErParams, rng: np.random.Generator, size: int, batch: int = 10_000
) -> np.ndarray:
    """Vectorized draws of the isolated-vertex count."""
    n, m, N = params.n, params.m, params.slots
    table = np.array(pair_table(n), dtype=np.int64) - 1  # 0-based endpoints
    out = np.empty(size, dtype=np.int64)
    done = 0
    while done < size:
        b = min(batch, size - done)
        slots = _sample_distinct_rows(rng, N, m, b)
        verts = table[slots].reshape(b, 2 * m)
        offsets = (np.arange(b, dtype=np.int64) * n)[:, None]
        counts = np.bincount((verts + offsets).ravel(), minlength=b * n).reshape(b, n)
        out[done : done + b] = (counts == 0).sum(axis=1)
        done += b
    return out


def kolmogorov_estimate(
    params: ErParams,
    rng: np.random.Generator,
    samples: int,
    confidence: float = 0.05,
) -> dict:
    """Empirical Kolmogorov distance of standardized counts to the normal."""
    mu, s2 = exact_moments(params)
    if s2 == 0:
        raise DegenerateParamsError(f"sigma^2 = 0 at {params}")
    sigma = float(s2) ** 0.5
    y = sample_isolated_counts(params, rng, samples)
    w = (y - float(mu)) / sigma
    report = empirical_kolmogorov(w, confidence=confidence)
    report["rate"] = rate(params)
    report["delta_times_rate"] = report["delta_hat"] * report["rate"]
    return report


def gd_conditional_variance_estimate(
    params: ErParams, rng: np.random.Generator, samples: int
) -> float:
    """sqrt of the Monte Carlo variance of E(GD | pi, Sigma).

    The inner expectation over the chosen vertex is computed exactly per
    sampled state: (1/sigma^2) sum_v (I_v - mu/n) B_v, with an independent
    candidate stream per vertex.
    """
    mu, s2 = exact_moments(params)
    if s2 == 0:
        raise DegenerateParamsError(f"sigma^2 = 0 at {params}")
    n = params.n
    mu_f, s2_f = float(mu), float(s2)
    vals = np.empty(samples)
    for i in range(samples):
        graph = sample_graph(params, rng)
        deg = degrees(graph)
        total = 0.0
        for v in range(1, n + 1):
            res = redistribute(graph, v, lazy_permutation(rng, params.slots))
            total += ((1 if deg[v - 1] == 0 else 0) - mu_f / n) * res.b_v
        vals[i] = total / s2_f
    return float(np.sqrt(max(vals.var(ddof=1), 0.0)))
