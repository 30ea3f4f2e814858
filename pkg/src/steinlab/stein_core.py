"""Model-agnostic coupling checkers, distance estimators and the recursion device.

Discrete laws carry exact rational probabilities so the coupling identities
(exchangeable pair, size bias, zero bias on two-point laws) can be verified
as exact identities on atoms.  The empirical Kolmogorov estimator and the
normal-distance helpers are float-valued, with the normal CDF evaluated
through the complementary error function (absolute error below 1e-15).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / SQRT2)


def normal_pdf(z: float) -> float:
    return INV_SQRT_2PI * math.exp(-0.5 * z * z)


def normal_ppf(p) -> float:
    return ndtri(p)


@dataclass(frozen=True)
class DiscreteLaw:
    """Finite support law with exact probabilities summing to one."""

    atoms: tuple

    def __post_init__(self):
        probs = [p for _, p in self.atoms]
        if any(p <= 0 for p in probs):
            raise ValueError("probabilities must be positive")
        if sum(probs) != 1:
            raise ValueError("probabilities must sum to 1 exactly")

    def values(self):
        return [v for v, _ in self.atoms]

    def expect(self, f: Callable) -> Fraction:
        return sum(p * f(v) for v, p in self.atoms)

    def moment(self, j: int):
        return self.expect(lambda v: v**j)

    def sorted_atoms(self):
        return sorted(self.atoms, key=lambda vp: vp[0])


def law_from_pairs(pairs: Iterable[tuple]) -> DiscreteLaw:
    """Collapse duplicate values and drop zero-probability atoms."""
    acc: dict = {}
    for v, p in pairs:
        if p == 0:
            continue
        acc[v] = acc.get(v, Fraction(0)) + p
    return DiscreteLaw(tuple(sorted(acc.items(), key=lambda vp: vp[0])))


# ---------------------------------------------------------------------------
# Kolmogorov / Wasserstein distances
# ---------------------------------------------------------------------------


def empirical_kolmogorov(samples, confidence: float = 0.05) -> dict:
    """sup_z |F_hat(z) - Phi(z)| for an empirical CDF, with its DKW band.

    The supremum of a step function against a continuous CDF is attained at
    a jump point, approached from the left or evaluated at the jump, so the
    scan over sorted unique sample values with their left limits is exact.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    k = x.size
    if k < 100:
        raise ValueError("need at least 100 samples")
    vals, counts = np.unique(x, return_counts=True)
    cum = np.cumsum(counts) / k
    cdf_at = ndtr(vals)
    left = np.concatenate(([0.0], cum[:-1]))
    delta_hat = float(np.max(np.maximum(np.abs(cum - cdf_at), np.abs(left - cdf_at))))
    band = math.sqrt(math.log(2.0 / confidence) / (2.0 * k))
    return {"delta_hat": delta_hat, "dkw_band": band, "samples": k}


def kolmogorov_discrete_vs_normal(law: DiscreteLaw) -> float:
    """Exact sup_z |F(z) - Phi(z)| for a finite discrete law."""
    best = 0.0
    cum = Fraction(0)
    for v, p in law.sorted_atoms():
        c = normal_cdf(float(v))
        best = max(best, abs(float(cum) - c), abs(float(cum + p) - c))
        cum += p
    return best


def _int_normal_cdf(a: float, b: float) -> float:
    """int_a^b Phi(z) dz via the antiderivative z Phi(z) + pdf(z)."""
    return (b * normal_cdf(b) + normal_pdf(b)) - (a * normal_cdf(a) + normal_pdf(a))


def wasserstein_discrete_vs_normal(law: DiscreteLaw) -> float:
    """Exact d1 = int |F(z) - Phi(z)| dz for a finite discrete law."""

    def seg(a: float, b: float, level: float) -> float:
        # integral of |level - Phi| over [a, b]; split where Phi crosses level
        if 0.0 < level < 1.0:
            z = float(ndtri(level))
            if a < z < b:
                return seg(a, z, level) + seg(z, b, level)
        mid = _int_normal_cdf(a, b)
        return abs(level * (b - a) - mid)

    atoms = law.sorted_atoms()
    vs = [float(v) for v, _ in atoms]
    total = 0.0
    # left tail: F = 0 on (-inf, v_1];  int_-inf^v Phi = v Phi(v) + pdf(v)
    total += vs[0] * normal_cdf(vs[0]) + normal_pdf(vs[0])
    cum = Fraction(0)
    for i in range(len(atoms) - 1):
        cum += atoms[i][1]
        total += seg(vs[i], vs[i + 1], float(cum))
    # right tail: int_v^inf (1 - Phi) = pdf(v) - v (1 - Phi(v))
    total += normal_pdf(vs[-1]) - vs[-1] * (1.0 - normal_cdf(vs[-1]))
    return total


def wasserstein_estimate(samples) -> float:
    """Order-statistics estimate of d1 to the standard normal."""
    x = np.sort(np.asarray(samples, dtype=float))
    k = x.size
    q = ndtri((np.arange(1, k + 1) - 0.5) / k)
    return float(np.mean(np.abs(x - q)))


# ---------------------------------------------------------------------------
# The scalar recursion and its finite-kernel generalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecursionSpec:
    q: float
    c: float

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if self.c <= 0:
            raise ValueError("c must be positive")


def recursion_closed_form(spec: RecursionSpec, n: int) -> float:
    """Solution q^(n-1) + c (1 - q^(n-1))/(1 - q) of a_n = q a_(n-1) + c, a_1 = 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    qp = spec.q ** (n - 1)
    return qp + spec.c * (1.0 - qp) / (1.0 - spec.q)


@dataclass(frozen=True)
class FiniteKernel:
    """Finite-state weighted transition structure for the recursion bound.

    ``transitions[state]`` lists (successor, x_weight, probability) triples;
    ``rate`` is the growth control used by the fourth condition.  On the
    nice set the x-weights must average to one, off it they must vanish.
    """

    states: tuple
    active_states: frozenset
    transitions: Mapping
    rate: Mapping


class KernelConditionError(ValueError):
    pass


def _validate_kernel(kernel: FiniteKernel, q: float, tol: float = 1e-12) -> None:
    for s in kernel.states:
        rows = kernel.transitions.get(s, ())
        mean_x = float(sum(Fraction(p) * Fraction(x) for _, x, p in rows))
        if s in kernel.active_states:
            if abs(mean_x - 1.0) > tol:
                raise KernelConditionError(f"E[X] != 1 at nice state {s!r}: {mean_x}")
        else:
            if any(x != 0 for _, x, _ in rows):
                raise KernelConditionError(f"X not identically 0 off the nice set at {s!r}")


def recursion_bound_solve(kernel: FiniteKernel, spec: RecursionSpec, tol: float = 1e-12) -> dict:
    """Maximal fixed point of a = q E[X a(Psi)] + c over a finite kernel.

    Raises KernelConditionError when the mean-one / vanishing-weight
    conditions fail, or when the solved map violates the growth control
    a <= r, max_{X>0} r(Psi) <= r/(2q).
    """
    _validate_kernel(kernel, spec.q)
    start = spec.c / (1.0 - spec.q) + 1.0
    a = {s: start for s in kernel.states}
    for _ in range(100_000):
        worst = 0.0
        new = {}
        for s in kernel.states:
            val = spec.q * sum(p * x * a[t] for t, x, p in kernel.transitions.get(s, ())) + spec.c
            worst = max(worst, abs(val - a[s]))
            new[s] = val
        a = new
        if worst <= tol:
            break
    else:
        raise RuntimeError("fixed-point iteration did not converge")

    violations = []
    for s in kernel.active_states:
        r_s = float(kernel.rate[s])
        if a[s] > r_s + 1e-9:
            violations.append(f"a({s!r})={a[s]:.6g} exceeds r({s!r})={r_s:.6g}")
        support_rates = [float(kernel.rate[t]) for t, x, _ in kernel.transitions.get(s, ()) if x != 0]
        if support_rates and max(support_rates) > r_s / (2.0 * spec.q) + 1e-9:
            violations.append(
                f"rate growth at {s!r}: max r(Psi)={max(support_rates):.6g} "
                f"> r/(2q)={r_s / (2.0 * spec.q):.6g}"
            )
    if violations:
        raise KernelConditionError("; ".join(violations))

    sup_ok = max(a.values()) <= spec.c / (1.0 - spec.q) + 1e-9
    return {"a": a, "sup_ok": sup_ok}


# ---------------------------------------------------------------------------
# Coupling identity checkers
# ---------------------------------------------------------------------------


def check_stein_pair(pair_law: DiscreteLaw, lam) -> dict:
    """Exchangeability and E[W'|W] = (1-lambda) W, plus the coupling identity.

    ``pair_law`` is a joint law over (w, w') tuples with exact values and
    probabilities.  With G = (W'-W)/(2 lambda) the coupling identity
    E[G f(W') - G f(W)] = E[W f(W)] is verified exactly for f = x, x^2, x^3.
    """
    lam = Fraction(lam)
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    joint: dict = {}
    for (w, wp), p in pair_law.atoms:
        joint[(w, wp)] = joint.get((w, wp), Fraction(0)) + p
    exchangeable = all(joint.get((b, a), Fraction(0)) == p for (a, b), p in joint.items())

    cond: dict = {}
    for (w, wp), p in joint.items():
        cond.setdefault(w, []).append((wp, p))
    conditional_mean_ok = all(
        sum(p * (Fraction(wp) - (1 - lam) * Fraction(w)) for wp, p in rows) == 0
        for w, rows in cond.items()
    )

    identity_ok = {}
    for deg in (1, 2, 3):
        lhs = sum(
            p * (Fraction(wp) - Fraction(w)) / (2 * lam) * (Fraction(wp) ** deg - Fraction(w) ** deg)
            for (w, wp), p in joint.items()
        )
        rhs = sum(p * Fraction(w) ** (deg + 1) for (w, wp), p in joint.items())
        identity_ok[deg] = lhs == rhs

    return {
        "exchangeable": exchangeable,
        "conditional_mean_ok": conditional_mean_ok,
        "identity_ok": identity_ok,
        "is_stein_pair": exchangeable and conditional_mean_ok and all(identity_ok.values()),
    }


def zero_bias_two_point(a, b) -> dict:
    """Zero-bias transform of the mean-zero two-point law at a > 0 > b.

    The law puts mass -b/(a-b) at a and a/(a-b) at b; its zero-bias
    distribution is uniform on (b, a).  The transform identity
    E[W f(W)] = sigma^2 E[f'(W*)] is verified exactly for f = x^k, k <= 4,
    using E[(W*)^j] = (a^(j+1) - b^(j+1)) / ((j+1)(a-b)).
    """
    a, b = Fraction(a), Fraction(b)
    if not (a > 0 > b):
        raise ValueError("need a > 0 > b for a mean-zero two-point law")
    p_a = -b / (a - b)
    p_b = a / (a - b)
    sigma2 = -a * b

    def law_moment(j):
        return p_a * a**j + p_b * b**j

    def uniform_moment(j):
        return (a ** (j + 1) - b ** (j + 1)) / ((j + 1) * (a - b))

    checks = {"mean_zero": law_moment(1) == 0, "variance": law_moment(2) == sigma2}
    for k in range(1, 5):
        checks[f"identity_x{k}"] = law_moment(k + 1) == sigma2 * k * uniform_moment(k - 1)

    return {
        "lower": b,
        "upper": a,
        "p_upper": p_a,
        "p_lower": p_b,
        "variance": sigma2,
        "checks": checks,
        "all_ok": all(checks.values()),
    }


def size_bias_law(law: DiscreteLaw) -> DiscreteLaw:
    """The tilted law k p_k / mu of a nonnegative law with positive mean."""
    mu = law.moment(1)
    if mu <= 0:
        raise ValueError("size biasing needs a positive mean")
    return law_from_pairs((v, Fraction(v) * p / mu) for v, p in law.atoms)


def check_size_bias(law: DiscreteLaw, coupled_law: DiscreteLaw) -> dict:
    """E[Y f(Y)] = mu E[f(Y^s)] on atoms, plus the coupling-identity reduction.

    Checks f = x, x^2 and the indicator grid f = 1[. <= t] at every atom,
    then the reduction W = Y - mu, W' = Y' - mu, G = mu against the coupling
    identity for f = x, x^2, x^3.  All comparisons are exact.
    """
    mu = law.moment(1)
    if mu <= 0:
        raise ValueError("size biasing needs a positive mean")

    def both(f):
        return law.expect(lambda y: Fraction(y) * f(y)), mu * coupled_law.expect(f)

    tilt_ok = {}
    for name, f in (("x", lambda y: Fraction(y)), ("x2", lambda y: Fraction(y) ** 2)):
        lhs, rhs = both(f)
        tilt_ok[name] = lhs == rhs
    for t, _ in law.atoms:
        lhs, rhs = both(lambda y, t=t: Fraction(1 if y <= t else 0))
        tilt_ok[f"ind<= {t}"] = lhs == rhs

    identity_ok = {}
    for deg in (1, 2, 3):
        f = lambda w, d=deg: Fraction(w) ** d
        lhs = mu * (coupled_law.expect(lambda y: f(Fraction(y) - mu)) - law.expect(lambda y: f(Fraction(y) - mu)))
        rhs = law.expect(lambda y: (Fraction(y) - mu) * f(Fraction(y) - mu))
        identity_ok[deg] = lhs == rhs

    return {
        "tilt_ok": tilt_ok,
        "identity_ok": identity_ok,
        "all_ok": all(tilt_ok.values()) and all(identity_ok.values()),
    }


# ---------------------------------------------------------------------------
# Exhaustive Efron-Stein-type variance bound
# ---------------------------------------------------------------------------


def _all_perms(N: int):
    return [tuple(p) for p in itertools.permutations(range(1, N + 1))]


def _compose(pi: Sequence[int], tau: Sequence[int]) -> tuple:
    # (pi tau)(x) = pi(tau(x)), with permutations as 1-based tuples
    return tuple(pi[tau[i] - 1] for i in range(len(pi)))


def _transposition(N: int, i: int, j: int) -> tuple:
    t = list(range(1, N + 1))
    t[i - 1], t[j - 1] = t[j - 1], t[i - 1]
    return tuple(t)


def check_efron_stein(h: Callable, N: int, n_sigma: int) -> dict:
    """Exhaustive check of the single-coordinate/transposition variance bound.

    ``h(pi, sigmas)`` takes a permutation of [N] and a tuple of ``n_sigma``
    permutations, and may return int or Fraction.  The variance and the
    right-hand side are computed exactly over the full product space, with
    each transposition tau_j averaged over its uniform target in {j..N}.
    """
    if N > 4 or n_sigma > 2:
        raise ValueError("exhaustive enumeration kept feasible only for N <= 4, n_sigma <= 2")
    perms = _all_perms(N)
    nper = len(perms)
    sigma_tuples = list(itertools.product(perms, repeat=n_sigma))
    states = [(pi, sig) for pi in perms for sig in sigma_tuples]
    weight = Fraction(1, len(states))

    hval = {st: Fraction(h(*st)) for st in states}
    mean = sum(hval[st] * weight for st in states)
    var = sum((hval[st] - mean) ** 2 * weight for st in states)

    # sum over coordinates of Sigma: replace sigma_i by an independent copy
    first = Fraction(0)
    for i in range(n_sigma):
        acc = Fraction(0)
        for pi, sig in states:
            base = hval[(pi, sig)]
            for rep in perms:
                other = sig[:i] + (rep,) + sig[i + 1 :]
                acc += (base - hval[(pi, other)]) ** 2
        first += acc * weight / nper

    # sum over positions j: compose pi with tau_j, averaged over its target
    second = Fraction(0)
    for j in range(1, N):
        acc = Fraction(0)
        for pi, sig in states:
            base = hval[(pi, sig)]
            for target in range(j, N + 1):
                moved = _compose(pi, _transposition(N, j, target))
                acc += Fraction((base - hval[(moved, sig)]) ** 2, N - j + 1)
        second += acc * weight

    bound = first / 2 + second / 2
    return {"var": var, "bound": bound, "holds": var <= bound}
