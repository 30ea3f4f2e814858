"""Jack measure on integer partitions: exact probabilities, the one-box
growth process, content statistics and the zero-bias construction.

Partitions are tuples of non-increasing positive parts.  The growth chain
adds one box per step; its transition weight is the ratio of hook-type
products times a column correction, all computed exactly in rational
arithmetic.  Sampling uses a float fast path over a run-length encoding of
the partition whose per-run telescoped products are tested against the
literal box-by-box reference.

The deformation parameter alpha is carried as an exact Fraction wherever a
probability or content is produced; the irrational scale sqrt(alpha C(n,2))
enters only at the final standardization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactnum import binomial
from .stein_core import (
    DiscreteLaw,
    empirical_kolmogorov,
    law_from_pairs,
    wasserstein_estimate,
)

MAX_ENUMERATION_N = 60


@dataclass(frozen=True)
class JackParams:
    n: int
    alpha: Fraction

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def alpha_float(self) -> float:
        return float(self.alpha)


def _validate_partition(parts: Sequence[int]) -> tuple:
    parts = tuple(int(p) for p in parts)
    if not parts or any(p <= 0 for p in parts):
        raise ValueError("parts must be positive")
    if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
        raise ValueError("parts must be non-increasing")
    return parts


def conjugate(parts: Sequence[int]) -> tuple:
    parts = _validate_partition(parts)
    return tuple(sum(1 for p in parts if p >= c) for c in range(1, parts[0] + 1))


def parse_partition(text: str) -> tuple:
    """Parse the comma-joined serialization, e.g. "4,2,1"."""
    return _validate_partition(int(f) for f in text.split(","))


def format_partition(parts: Sequence[int]) -> str:
    return ",".join(str(p) for p in _validate_partition(parts))


def arm_leg(parts: Sequence[int], box: tuple[int, int]) -> tuple[int, int]:
    """(arm, leg) of a box given as 1-based (row, col)."""
    parts = _validate_partition(parts)
    r, c = box
    if not (1 <= r <= len(parts) and 1 <= c <= parts[r - 1]):
        raise ValueError("box outside the diagram")
    arm = parts[r - 1] - c
    leg = sum(1 for rr in range(r, len(parts)) if parts[rr] >= c)
    return arm, leg


def enumerate_partitions(n: int) -> list[tuple]:
    """All partitions of n, largest part first."""
    if not 1 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"n must lie in [1, {MAX_ENUMERATION_N}]")
    out: list[tuple] = []

    def rec(remaining: int, cap: int, prefix: list[int]):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for k in range(min(cap, remaining), 0, -1):
            prefix.append(k)
            rec(remaining - k, k, prefix)
            prefix.pop()

    rec(n, n, [])
    return out


def _hook_products(parts: tuple, alpha: Fraction) -> tuple[Fraction, Fraction]:
    """(prod (alpha a + l + 1), prod (alpha a + l + alpha)) over all boxes."""
    lo = Fraction(1)
    hi = Fraction(1)
    for r in range(1, len(parts) + 1):
        for c in range(1, parts[r - 1] + 1):
            a = parts[r - 1] - c
            l = sum(1 for rr in range(r, len(parts)) if parts[rr] >= c)
            lo *= alpha * a + l + 1
            hi *= alpha * a + l + alpha
    return lo, hi


def jack_probability(parts: Sequence[int], alpha) -> Fraction:
    """Exact measure of a partition: alpha^n n! over the two hook products."""
    parts = _validate_partition(parts)
    alpha = Fraction(alpha)
    n = sum(parts)
    lo, hi = _hook_products(parts, alpha)
    return Fraction(alpha**n * math.factorial(n), 1) / (lo * hi)


def content_sum(parts: Sequence[int], alpha) -> Fraction:
    """Y = sum over boxes of alpha (col-1) - (row-1), exact."""
    parts = _validate_partition(parts)
    alpha = Fraction(alpha)
    return sum(
        alpha * Fraction(lam * (lam - 1), 2) - (i - 1) * lam
        for i, lam in enumerate(parts, start=1)
    )


def content_scale(n: int, alpha) -> float:
    return math.sqrt(float(Fraction(alpha) * binomial(n, 2)))


def standardized_content(parts: Sequence[int], alpha) -> float:
    """W = Y / sqrt(alpha C(n,2)) for a partition of n >= 2."""
    parts = _validate_partition(parts)
    n = sum(parts)
    if n < 2:
        raise ValueError("standardization needs n >= 2")
    return float(content_sum(parts, alpha)) / content_scale(n, alpha)


def addable_corners(parts: Sequence[int]) -> list[tuple[int, int]]:
    """Positions (row, col) where a box can be added, new row included."""
    parts = _validate_partition(parts)
    out = [(1, parts[0] + 1)]
    for i in range(1, len(parts)):
        if parts[i] < parts[i - 1]:
            out.append((i + 1, parts[i] + 1))
    out.append((len(parts) + 1, 1))
    return out


def _add_box(parts: tuple, corner: tuple[int, int]) -> tuple:
    r, _ = corner
    if r == len(parts) + 1:
        return parts + (1,)
    grown = list(parts)
    grown[r - 1] += 1
    return tuple(grown)


@dataclass(frozen=True)
class CornerDistribution:
    corners: tuple  # (row, col) positions
    contents: tuple  # exact alpha-contents of the candidate boxes
    probs: tuple  # exact transition probabilities


def kerov_transition_probs(parts: Sequence[int], alpha) -> CornerDistribution:
    """Exact one-step growth law from a partition.

    The weight of a corner is the ratio of the lower hook products of the
    old and grown diagram times the column correction over the boxes above
    the new box, evaluated literally box by box.
    """
    parts = _validate_partition(parts)
    alpha = Fraction(alpha)
    corners = addable_corners(parts)
    c_old, _ = _hook_products(parts, alpha)
    contents = []
    probs = []
    for r, c in corners:
        grown = _add_box(parts, (r, c))
        c_new, _ = _hook_products(grown, alpha)
        psi = Fraction(1)
        for i in range(1, r):
            a_new = grown[i - 1] - c
            l_new = sum(1 for rr in range(i, len(grown)) if grown[rr] >= c)
            a_old = parts[i - 1] - c
            l_old = sum(1 for rr in range(i, len(parts)) if parts[rr] >= c)
            psi *= (alpha * a_new + l_new + 1) / (alpha * a_new + l_new + alpha)
            psi *= (alpha * a_old + l_old + alpha) / (alpha * a_old + l_old + 1)
        contents.append(alpha * (c - 1) - (r - 1))
        probs.append(c_old / c_new * psi)
    return CornerDistribution(tuple(corners), tuple(contents), tuple(probs))


def chain_law(n: int, alpha) -> dict:
    """Exact law of the growth chain at time n, by forward recursion."""
    alpha = Fraction(alpha)
    law = {(1,): Fraction(1)}
    for _ in range(n - 1):
        nxt: dict = {}
        for parts, p in law.items():
            dist = kerov_transition_probs(parts, alpha)
            for corner, tp in zip(dist.corners, dist.probs):
                grown = _add_box(parts, corner)
                nxt[grown] = nxt.get(grown, Fraction(0)) + p * tp
        law = nxt
    return law


# ---------------------------------------------------------------------------
# Fast float sampler over run-length encoded partitions
# ---------------------------------------------------------------------------


def _fast_corner_weights(runs: list[list[int]], alpha: float):
    """(contents, weights) of all addable corners, float arithmetic.

    ``runs`` is the run-length encoding [[value, count], ...] with strictly
    decreasing values.  Per-run telescoping reduces the box products of the
    transition weight to one factor per run; the algebra is checked against
    the literal rational implementation in the tests.
    """
    r = len(runs)
    S = [0] * (r + 1)
    for i, (_, k) in enumerate(runs):
        S[i + 1] = S[i] + k
    contents = []
    weights = []
    for t in range(r + 1):
        if t < r:
            v_t = runs[t][0]
            c = v_t + 1
            rows_above = S[t]
        else:  # brand-new bottom row
            v_t = 0
            c = 1
            rows_above = S[r]
        w = 1.0
        # boxes above the new box, one telescoped factor per run
        for s in range(t if t < r else r):
            A = alpha * (runs[s][0] - c) + alpha
            w *= (A + rows_above - S[s + 1]) / (A + rows_above - S[s])
        # boxes to the left of the new box, one factor per constant-leg block
        if t < r:
            j_hi = v_t
            for u in range(t, r):
                j_lo = runs[u + 1][0] + 1 if u + 1 < r else 1
                L = S[u + 1] - S[t] - 1
                w *= (alpha * (c - 1 - j_hi) + L + 1) / (alpha * (c - j_lo) + L + 1)
                j_hi = j_lo - 1
        contents.append(alpha * (c - 1) - rows_above)
        weights.append(w)
    return contents, weights


def _grow_runs(runs: list[list[int]], t: int) -> None:
    """Add a box at corner index t (len(runs) = bottom corner), in place."""
    if t == len(runs):
        if runs and runs[-1][0] == 1:
            runs[-1][1] += 1
        else:
            runs.append([1, 1])
        return
    v = runs[t][0]
    if t > 0 and runs[t - 1][0] == v + 1:
        runs[t - 1][1] += 1
    else:
        runs.insert(t, [v + 1, 1])
        t += 1
    runs[t][1] -= 1
    if runs[t][1] == 0:
        del runs[t]


def _runs_to_parts(runs: list[list[int]]) -> tuple:
    out = []
    for v, k in runs:
        out.extend([v] * k)
    return tuple(out)


def kerov_sample(n: int, alpha, rng: np.random.Generator):
    """Grow a partition of n from (1); returns (partition, added contents).

    The n-1 recorded contents are exact Fractions; transition weights are
    evaluated on the float fast path.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha = Fraction(alpha)
    af = float(alpha)
    runs = [[1, 1]]
    trajectory = []
    for _ in range(n - 1):
        contents, weights = _fast_corner_weights(runs, af)
        total = math.fsum(weights)
        if abs(total - 1.0) > 1e-6:
            raise RuntimeError(f"corner weights sum to {total}, not 1")
        u = rng.random() * total
        acc = 0.0
        t = len(weights) - 1
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                t = i
                break
        S_t = sum(k for _, k in runs[:t])
        col = runs[t][0] + 1 if t < len(runs) else 1
        row = (S_t if t < len(runs) else sum(k for _, k in runs)) + 1
        trajectory.append(alpha * (col - 1) - (row - 1))
        _grow_runs(runs, t)
    return _runs_to_parts(runs), trajectory


def sample_jack_batch(n: int, alpha, rng: np.random.Generator, size: int) -> dict:
    """Monte Carlo sweep: standardized contents and the pre-final first row.

    Returns arrays ``w`` (standardized content of the partition of n) and
    ``lambda1_prev`` (first-row length at time n-1, the truncation-event
    statistic).
    """
    if n < 2:
        raise ValueError("standardized sampling needs n >= 2")
    alpha = Fraction(alpha)
    af = float(alpha)
    scale = content_scale(n, alpha)
    w = np.empty(size)
    lam1_prev = np.empty(size, dtype=np.int64)
    for i in range(size):
        runs = [[1, 1]]
        y = 0.0
        for step in range(n - 1):
            contents, weights = _fast_corner_weights(runs, af)
            u = rng.random() * math.fsum(weights)
            acc = 0.0
            t = len(weights) - 1
            for j, wt in enumerate(weights):
                acc += wt
                if u < acc:
                    t = j
                    break
            if step == n - 2:
                lam1_prev[i] = runs[0][0]
            y += contents[t]
            _grow_runs(runs, t)
        w[i] = y / scale
    return {"w": w, "lambda1_prev": lam1_prev}


# ---------------------------------------------------------------------------
# Conditional content moments and the zero-bias construction
# ---------------------------------------------------------------------------


def conditional_t_moments(parts: Sequence[int], alpha, n: int) -> tuple[Fraction, Fraction]:
    """Exact conditional moments of the standardized added content.

    For a partition of n-1, returns (sum_i p_i c_i, sum_i p_i c_i^2 divided
    by alpha C(n,2)); the first is the first moment up to the positive scale
    sqrt(alpha C(n,2)) and vanishes iff the true first moment does, the
    second is exactly E[T^2 | partition] and should equal 2/n.
    """
    parts = _validate_partition(parts)
    if sum(parts) != n - 1:
        raise ValueError("partition must have size n - 1")
    alpha = Fraction(alpha)
    dist = kerov_transition_probs(parts, alpha)
    m1 = sum(p * c for p, c in zip(dist.probs, dist.contents))
    m2 = sum(p * c * c for p, c in zip(dist.probs, dist.contents))
    return m1, m2 / (alpha * binomial(n, 2))


@dataclass(frozen=True)
class ZeroBiasPair:
    """Joint weight table of the reweighted pair of candidate contents."""

    contents: tuple  # exact contents c_i of the addable corners
    corner_probs: tuple  # exact one-step probabilities p_i
    weights: dict  # (i, j) -> exact weight proportional to p_i p_j (t_i - t_j)^2
    normalizer: Fraction  # exact E (T' - T'')^2, equal to 4/n


def zero_bias_pair_distribution(parts: Sequence[int], alpha) -> ZeroBiasPair:
    """Exact pair table with weights p_i p_j (t_i - t_j)^2 / (4/n)."""
    parts = _validate_partition(parts)
    n = sum(parts) + 1
    alpha = Fraction(alpha)
    dist = kerov_transition_probs(parts, alpha)
    scale2 = alpha * binomial(n, 2)
    raw: dict = {}
    normalizer = Fraction(0)
    for i, (pi, ci) in enumerate(zip(dist.probs, dist.contents)):
        for j, (pj, cj) in enumerate(zip(dist.probs, dist.contents)):
            if i == j:
                continue
            wt = pi * pj * (ci - cj) ** 2 / scale2
            normalizer += wt
            if wt:
                raw[(i, j)] = wt
    weights = {ij: wt / normalizer for ij, wt in raw.items()}
    return ZeroBiasPair(dist.contents, dist.probs, weights, normalizer)


def zero_bias_sample(n: int, alpha, rng: np.random.Generator) -> dict:
    """One coupled draw (W, W*, D) from the zero-bias construction.

    Grows the chain to n-1, then draws the actual next-step content T and,
    conditionally independently, the reweighted pair (T-dagger, T-ddagger)
    with an independent uniform mixer, so that W = V/scale + T has the
    content law at n and W* = V/scale + U T-dagger + (1-U) T-ddagger its
    zero-bias transform; D = W* - W = T* - T.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    alpha = Fraction(alpha)
    parts, _ = kerov_sample(n - 1, alpha, rng)
    v = content_sum(parts, alpha)
    scale = content_scale(n, alpha)
    pair = zero_bias_pair_distribution(parts, alpha)

    u_t = rng.random()
    acc = 0.0
    t = float(pair.contents[-1]) / scale
    for content, prob in zip(pair.contents, pair.corner_probs):
        acc += float(prob)
        if u_t < acc:
            t = float(content) / scale
            break

    items = sorted(pair.weights.items())
    u_sel = rng.random()
    acc = 0.0
    chosen = items[-1][0]
    for ij, wt in items:
        acc += float(wt)
        if u_sel < acc:
            chosen = ij
            break
    t_dag = float(pair.contents[chosen[0]]) / scale
    t_ddag = float(pair.contents[chosen[1]]) / scale
    u = rng.random()
    t_star = u * t_dag + (1 - u) * t_ddag
    w = float(v) / scale + t
    w_star = float(v) / scale + t_star
    return {
        "w": w,
        "w_star": w_star,
        "d": w_star - w,
        "v": v,
        "t": t,
        "t_star": t_star,
        "t_dagger": t_dag,
        "t_ddagger": t_ddag,
        "lambda1_prev": parts[0],
    }


def _u_integral(v: Fraction, ci: Fraction, cj: Fraction, power: int) -> Fraction:
    """int_0^1 (v + u ci + (1-u) cj)^power du, exact."""
    if power == 0:
        return Fraction(1)
    hi, lo = v + ci, v + cj
    if ci == cj:
        return hi**power
    return (hi ** (power + 1) - lo ** (power + 1)) / ((power + 1) * (hi - lo))


def check_zero_bias_identity(n: int, alpha, coeffs: Sequence) -> dict:
    """Exact two-sided verification of E[W f(W)] = E[f'(W*)].

    ``coeffs`` are polynomial coefficients of f, lowest degree first, with
    degree at most 5.  The left side enumerates partitions of n under the
    exact measure; the right side enumerates the growth chain to n-1, the
    pair table, and integrates the interpolation parameter in closed form.
    Powers of the irrational scale are cleared monomial by monomial, so the
    comparison is exact rational equality.
    """
    if n > 8:
        raise ValueError("exhaustive check kept feasible only for n <= 8")
    if len(coeffs) > 6:
        raise ValueError("polynomial degree must be at most 5")
    alpha = Fraction(alpha)
    coeffs = [Fraction(c) for c in coeffs]
    scale2 = alpha * binomial(n, 2)
    scale = float(scale2) ** 0.5

    measure = [(parts, jack_probability(parts, alpha)) for parts in enumerate_partitions(n)]
    y_moment = lambda j: sum(p * content_sum(parts, alpha) ** j for parts, p in measure)

    prev_law = chain_law(n - 1, alpha)
    pair_tables = [
        (prob, content_sum(parts, alpha), zero_bias_pair_distribution(parts, alpha))
        for parts, prob in prev_law.items()
    ]

    lhs_total = 0.0
    rhs_total = 0.0
    exact_all = True
    per_monomial = {}
    for k, coef in enumerate(coeffs):
        if coef == 0:
            continue
        lhs_k = y_moment(k + 1)  # times scale^-(k+1)
        if k == 0:
            rhs_k = Fraction(0)
        else:
            rhs_k = k * sum(
                prob * sum(
                    wt * _u_integral(v, pair.contents[i], pair.contents[j], k - 1)
                    for (i, j), wt in pair.weights.items()
                )
                for prob, v, pair in pair_tables
            )  # times scale^-(k-1)
        equal = lhs_k == rhs_k * scale2
        per_monomial[k] = equal
        exact_all = exact_all and equal
        lhs_total += float(coef) * float(lhs_k) / scale ** (k + 1)
        rhs_total += float(coef) * float(rhs_k) / scale ** max(k - 1, 0)
    return {
        "lhs": lhs_total,
        "rhs": rhs_total,
        "max_abs_err": abs(lhs_total - rhs_total),
        "exact_equal": exact_all,
        "per_monomial": per_monomial,
    }


def check_jack_moments(n: int, alpha) -> dict:
    """Exact E Y = 0 and E Y^2 = alpha C(n,2) by enumeration, n <= 12."""
    if n > 12:
        raise ValueError("full-measure moment check kept feasible only for n <= 12")
    alpha = Fraction(alpha)
    measure = [(parts, jack_probability(parts, alpha)) for parts in enumerate_partitions(n)]
    ey = sum(p * content_sum(parts, alpha) for parts, p in measure)
    ey2 = sum(p * content_sum(parts, alpha) ** 2 for parts, p in measure)
    return {"ey": ey, "ey2": ey2, "holds": ey == 0 and ey2 == alpha * binomial(n, 2)}


def exact_w_law(n: int, alpha) -> DiscreteLaw:
    """Law of the standardized content as float atoms with exact weights."""
    alpha = Fraction(alpha)
    scale = content_scale(n, alpha)
    return law_from_pairs(
        (float(content_sum(parts, alpha)) / scale, jack_probability(parts, alpha))
        for parts in enumerate_partitions(n)
    )


# ---------------------------------------------------------------------------
# Degeneracy, parameter region, distance reports
# ---------------------------------------------------------------------------


def single_column_prob(n: int, alpha) -> dict:
    """Exact P[first column = n] with its exponential lower bound."""
    alpha = Fraction(alpha)
    prob = Fraction(1)
    for l in range(n):
        prob *= alpha / (alpha + l)
    lower = math.exp(-(n * n) / float(alpha))
    return {"prob": prob, "lower_bound": lower, "holds": float(prob) >= lower - 1e-12}


def rate_and_region(n: int, alpha, epsilon: float) -> dict:
    """Rate n/sqrt(alpha) and the strict large-alpha window membership."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    af = float(Fraction(alpha))
    r = n / math.sqrt(af)
    in_region = n ** (1.0 + epsilon) < af < n**2 / 2 ** (1.0 - epsilon)
    return {"r": r, "in_region": in_region}


def alternative_rate(n: int, alpha) -> float:
    """(1/sqrt(n) + sqrt(alpha)/n)^-1, the conjectured all-alpha rate."""
    af = float(Fraction(alpha))
    return 1.0 / (1.0 / math.sqrt(n) + math.sqrt(af) / n)


def d_bar(n: int, alpha, epsilon: float) -> float:
    """Coupling-difference majorant 10 sqrt(alpha)/(n epsilon)."""
    return 10.0 * math.sqrt(float(Fraction(alpha))) / (n * epsilon)


def first_row_bound(n: int, alpha) -> float:
    """Bound 4 e alpha / n^2 on the heavy-first-row event at time n-1."""
    return 4.0 * math.e * float(Fraction(alpha)) / n**2


def check_wasserstein_bound(n: int, alpha, rng: np.random.Generator, samples: int) -> dict:
    """Order-statistics d1 estimate against the explicit root-n bound.

    The Monte Carlo slack 6/sqrt(samples) is a generous budget for the
    sampling error of the order-statistics coupling estimate.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    alpha = Fraction(alpha)
    af = float(alpha)
    batch = sample_jack_batch(n, alpha, rng, samples)
    d1_hat = wasserstein_estimate(batch["w"])
    bound = math.sqrt(2.0 / n) * (2.0 + math.sqrt(2.0 + max(af, 1.0 / af) / (n - 1)))
    slack = 6.0 / math.sqrt(samples)
    return {"d1_hat": d1_hat, "bound": bound, "holds_within_mc": d1_hat <= bound + slack}


def kolmogorov_estimate(
    n: int,
    alpha,
    rng: np.random.Generator,
    samples: int,
    confidence: float = 0.05,
) -> dict:
    """Empirical Kolmogorov distance of standardized contents to the normal,
    with the rate products for both candidate rate functions."""
    if n < 2:
        raise ValueError("n must be >= 2")
    alpha = Fraction(alpha)
    batch = sample_jack_batch(n, alpha, rng, samples)
    report = empirical_kolmogorov(batch["w"], confidence=confidence)
    af = float(alpha)
    report["delta_times_rate"] = report["delta_hat"] * n / math.sqrt(af)
    report["delta_times_alt_rate"] = report["delta_hat"] * alternative_rate(n, alpha)
    report["lambda1_prev"] = batch["lambda1_prev"]
    return report
