"""Batch experiment runner: grid sweeps, verification suites, seed management.

Subcommands::

    steinlab er-report   --grid "100,100;200,200" --samples 100000 ...
    steinlab jack-report --grid "16,64;32,181.019336" --epsilon 0.4 ...
    steinlab verify      [--out report.json] [--seed S]
    steinlab recursion   --q 0.5 --c 1 --n 10 [--chain 50]
    steinlab hyp         --params 20,5,6 [--k 2] [--t 1.0] [--moment 3]

A key=value config file supplies defaults; command-line flags override it.
CSV output starts with a ``# schema=1`` comment line; the JSON mirror carries
the same rows.  Exit codes: 0 success, 1 check failure, 2 configuration
error.  The master seed is split per (task, grid index), so results do not
depend on execution order or worker count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import er_model, exactnum, jack_model, stein_core

SCHEMA = 1
TASK_IDS = {"er-report": 1, "jack-report": 2, "verify": 3}

ER_COLUMNS = [
    "n", "m", "mu", "sigma2", "rate", "mu_approx", "sigma2_approx",
    "neg_corr_holds", "moment_sandwich_holds", "delta_hat", "dkw_band",
    "delta_times_rate", "exact_delta", "domain", "in_region",
]
JACK_COLUMNS = [
    "n", "alpha", "rate", "in_region", "delta_hat", "dkw_band",
    "delta_times_rate", "d1_hat", "wasserstein_bound", "single_column_prob",
    "fc_frequency", "fc_bound", "exact_delta",
]

EXACT_DELTA_LIMIT = 20_000  # edge sets / partitions worth enumerating per row


class ConfigError(ValueError):
    pass


def _spawn_rng(seed: int, task: str, grid_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(TASK_IDS[task], grid_index))
    return np.random.default_rng(ss)


def _parse_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line: {raw.rstrip()}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _parse_grid(text: str):
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        fields = [f.strip() for f in chunk.split(",")]
        if len(fields) != 2:
            raise ConfigError(f"grid point needs two fields: {chunk!r}")
        points.append(tuple(fields))
    if not points:
        raise ConfigError("empty grid")
    return points


def _parse_thresholds(text: str) -> dict:
    fields = [f.strip() for f in text.split(",")]
    if len(fields) != 3:
        raise ConfigError("thresholds must be n_bar,m_bar,c_bar")
    return {"n_bar": int(fields[0]), "m_bar": int(fields[1]), "c_bar": Fraction(fields[2])}


def _format_value(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _emit(rows: list[dict], columns: list[str], out_path: str | None, fmt: str) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# schema={SCHEMA}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_value(row.get(c)) for c in columns])
        text = buf.getvalue()
    else:
        payload = {
            "schema": SCHEMA,
            "rows": [{c: _format_value(row.get(c)) for c in columns} for row in rows],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# er-report
# ---------------------------------------------------------------------------


def _er_row(args_tuple) -> dict:
    (n, m), samples, seed, confidence, thresholds, grid_index = args_tuple
    params = er_model.ErParams(n, m)
    mu, s2 = er_model.exact_moments(params)
    mu_a, s2_a = er_model.asymptotic_moments(params)
    neg = er_model.check_negative_correlation(params)
    lem6 = er_model.check_moment_sandwich(params)
    row = {
        "n": n,
        "m": m,
        "mu": float(mu),
        "sigma2": float(s2),
        "rate": er_model.rate(params),
        "mu_approx": mu_a,
        "sigma2_approx": s2_a,
        "neg_corr_holds": neg["holds"] and neg["variance_caps"],
        "moment_sandwich_holds": lem6.get("holds_mu") and lem6.get("holds_sigma")
        if lem6["applicable"]
        else None,
        "domain": er_model.domain_label(params),
        "in_region": er_model.in_parameter_region(params, thresholds),
    }
    if s2 > 0:
        rng = _spawn_rng(seed, "er-report", grid_index)
        kol = er_model.kolmogorov_estimate(params, rng, samples, confidence)
        row.update(
            delta_hat=kol["delta_hat"],
            dkw_band=kol["dkw_band"],
            delta_times_rate=kol["delta_times_rate"],
        )
        if exactnum.binomial(params.slots, m) <= EXACT_DELTA_LIMIT:
            row["exact_delta"] = stein_core.kolmogorov_discrete_vs_normal(
                er_model.exact_w_law(params)
            )
    return row


def run_er_report(config: dict) -> int:
    grid = [(int(a), int(b)) for a, b in _parse_grid(config["grid"])]
    tasks = [
        (pt, config["samples"], config["seed"], config["confidence"], config["thresholds"], i)
        for i, pt in enumerate(grid)
    ]
    rows = _run_pool(_er_row, tasks, config["workers"])
    _emit(rows, ER_COLUMNS, config["out"], config["format"])
    return 0


# ---------------------------------------------------------------------------
# jack-report
# ---------------------------------------------------------------------------


def _jack_row(args_tuple) -> dict:
    (n_text, alpha_text), samples, seed, confidence, epsilon, grid_index = args_tuple
    params = jack_model.JackParams(int(n_text), Fraction(alpha_text))
    n, alpha = params.n, params.alpha
    rng = _spawn_rng(seed, "jack-report", grid_index)
    kol = jack_model.kolmogorov_estimate(n, alpha, rng, samples, confidence)
    lam1 = kol.pop("lambda1_prev")
    was = jack_model.check_wasserstein_bound(n, alpha, rng, max(samples // 10, 100))
    region = jack_model.rate_and_region(n, alpha, epsilon)
    col = jack_model.single_column_prob(n, alpha)
    return {
        "n": n,
        "alpha": alpha,
        "rate": region["r"],
        "in_region": region["in_region"],
        "delta_hat": kol["delta_hat"],
        "dkw_band": kol["dkw_band"],
        "delta_times_rate": kol["delta_times_rate"],
        "d1_hat": was["d1_hat"],
        "wasserstein_bound": was["bound"],
        "single_column_prob": float(col["prob"]),
        "fc_frequency": float(np.mean(lam1 > 2.0 / epsilon)),
        "fc_bound": jack_model.first_row_bound(n, alpha),
        "exact_delta": stein_core.kolmogorov_discrete_vs_normal(jack_model.exact_w_law(n, alpha))
        if n <= 8
        else None,
    }


def run_jack_report(config: dict) -> int:
    grid = _parse_grid(config["grid"])
    tasks = [
        (pt, config["samples"], config["seed"], config["confidence"], config["epsilon"], i)
        for i, pt in enumerate(grid)
    ]
    rows = _run_pool(_jack_row, tasks, config["workers"])
    _emit(rows, JACK_COLUMNS, config["out"], config["format"])
    return 0


def _run_pool(fn, tasks, workers: int) -> list:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def run_verify_suite(config: dict) -> tuple[int, dict]:
    """Exact checks over the fixed verification grid; deterministic."""
    perturb = config.get("perturb_kerov", 0.0)
    results: dict[str, bool] = {}

    alphas = [Fraction(1, 2), Fraction(1), Fraction(2)]

    ok = True
    for n in range(1, 7):
        for alpha in alphas:
            total = sum(
                jack_model.jack_probability(p, alpha) for p in jack_model.enumerate_partitions(n)
            )
            ok = ok and total == 1
    results["jack_normalization"] = ok

    ok = True
    for n in range(2, 7):
        for alpha in alphas:
            law = jack_model.chain_law(n, alpha)
            for parts, prob in law.items():
                target = jack_model.jack_probability(parts, alpha)
                if perturb:
                    target += Fraction(perturb).limit_denominator(10**9)
                ok = ok and prob == target
    results["kerov_consistency"] = ok

    ok = True
    for n in range(2, 7):
        for alpha in alphas:
            for parts in jack_model.enumerate_partitions(n - 1) if n > 1 else []:
                m1, m2 = jack_model.conditional_t_moments(parts, alpha, n)
                if perturb:
                    m2 += Fraction(perturb).limit_denominator(10**9)
                ok = ok and m1 == 0 and m2 == Fraction(2, n)
    results["conditional_t_moments"] = ok

    ok = True
    for n in range(2, 6):
        for alpha in alphas:
            rep = jack_model.check_zero_bias_identity(n, alpha, [0, 1, 1, 1])
            ok = ok and rep["exact_equal"]
    results["zero_bias_identity"] = ok

    results["jack_moments"] = all(
        jack_model.check_jack_moments(n, alpha)["holds"] for n in (2, 6, 8) for alpha in alphas
    )

    er42 = er_model.ErParams(4, 2)
    results["stein_identity_er"] = all(
        er_model.check_stein_identity_exhaustive(er42, coeffs)["equal"]
        for coeffs in ([0, 1], [0, 0, 1])
    )

    ok = True
    for n, m in [(4, 1), (4, 2), (4, 3), (5, 3)]:
        params = er_model.ErParams(n, m)
        law = er_model.exact_y_law(params)
        mu, s2 = er_model.exact_moments(params)
        ok = ok and law.moment(1) == mu and law.moment(2) - mu * mu == s2
    results["er_moments_enumeration"] = ok

    ok = True
    for N in range(4, 41, 6):
        for m in range(0, N // 2 + 1, max(N // 6, 1)):
            for n in range(0, N // 2 + 1, max(N // 6, 1)):
                p = exactnum.HypergeometricParams(N, m, n)
                ok = ok and sum(exactnum.hyp_pmf_vector(p).values()) == 1
                ok = ok and exactnum.hyp_zero_prob(p) == exactnum.hyp_pmf(p, 0)
                ok = ok and exactnum.check_zero_prob_sandwich(p)["holds"]
                if m and n:
                    ok = ok and exactnum.check_tail_bound(p, 1.0)["holds"]
                    ok = ok and exactnum.check_moment_bound(p, 2)["holds"]
    results["hypergeometric_grid"] = ok

    grid = [10.0 ** (e / 4.0) for e in range(-24, 13)]
    results["exp_remainder_grid"] = all(exactnum.check_exp_remainder_envelope(x)["holds"] for x in grid)

    ok = True
    for n in range(3, 41):
        for m in range(1, exactnum.binomial(n, 2), max(exactnum.binomial(n, 2) // 8, 1)):
            rep = er_model.check_negative_correlation(er_model.ErParams(n, m))
            ok = ok and rep["holds"] and rep["variance_caps"]
    results["neg_correlation_grid"] = ok

    ok = True
    for n in range(6, 101, 7):
        for m in {1, n // 2, n, 2 * n, int(n**1.5)}:
            if 0 < m < exactnum.binomial(n, 2) and m <= n * n / 4 - 1.5 * n:
                rep = er_model.check_moment_sandwich(er_model.ErParams(n, m))
                ok = ok and rep["holds_mu"] and rep["holds_sigma"]
    results["moment_sandwich_grid"] = ok

    spec = stein_core.RecursionSpec(0.5, 1.0)
    results["recursion_closed_form"] = (
        abs(stein_core.recursion_closed_form(spec, 1) - 1.0) < 1e-14
        and abs(stein_core.recursion_closed_form(spec, 4) - 1.875) < 1e-14
    )

    results["efron_stein"] = stein_core.check_efron_stein(
        lambda pi, sig: 1 if pi[0] == 1 else 0, 3, 1
    )["holds"]

    k = 512
    grid_samples = stein_core.normal_ppf((np.arange(1, k + 1) - 0.5) / k)
    rep = stein_core.empirical_kolmogorov(grid_samples)
    results["kolmogorov_quantile_grid"] = abs(rep["delta_hat"] - 1.0 / (2 * k)) < 1e-12

    failed = sorted(name for name, passed in results.items() if not passed)
    payload = {"schema": SCHEMA, "results": results, "failed": failed}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if config.get("out"):
        with open(config["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return (1 if failed else 0), payload


# ---------------------------------------------------------------------------
# recursion / hyp ad-hoc subcommands
# ---------------------------------------------------------------------------


def run_recursion(config: dict) -> int:
    spec = stein_core.RecursionSpec(config["q"], config["c"])
    lines = [f"a_{n} = {stein_core.recursion_closed_form(spec, n)!r}" for n in range(1, config["n"] + 1)]
    lines.append(f"limit c/(1-q) = {config['c'] / (1 - config['q'])!r}")
    if config.get("chain"):
        kernel = chain_kernel(config["chain"], config["q"])
        solved = stein_core.recursion_bound_solve(kernel, spec)
        lines.append(f"chain({config['chain']}) sup a = {max(solved['a'].values())!r}")
        lines.append(f"sup_ok = {solved['sup_ok']}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def chain_kernel(length: int, q: float) -> stein_core.FiniteKernel:
    """Descending chain k -> k-1 with unit weights; state 1 is the base case.

    Rates K (2q)^-k satisfy the growth control for q <= 1/2.
    """
    states = tuple(range(1, length + 1))
    trans = {1: ()}
    for k in range(2, length + 1):
        trans[k] = ((k - 1, 1, Fraction(1)),)
    base = max(1.0 / (1.0 - q) + 2.0, 2.0)
    rate = {k: base / (2 * q) ** k for k in states}
    return stein_core.FiniteKernel(states, frozenset(range(2, length + 1)), trans, rate)


def run_hyp(config: dict) -> int:
    params = exactnum.HypergeometricParams(*config["params"])
    out = {
        "params": list(config["params"]),
        "mean": str(params.mean),
        "zero_prob": str(exactnum.hyp_zero_prob(params)),
    }
    if config.get("k") is not None:
        out["pmf"] = str(exactnum.hyp_pmf(params, config["k"]))
    if config.get("moment") is not None:
        out["moment"] = str(exactnum.hyp_moment(params, config["moment"]))
    if config.get("t") is not None:
        rep = exactnum.check_tail_bound(params, config["t"])
        out["tail_check"] = {"lhs": rep["lhs"], "rhs": rep["rhs"], "holds": rep["holds"]}
    sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="steinlab", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value defaults file")
        p.add_argument("--grid")
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--confidence", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--out")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--thresholds", help="n_bar,m_bar,c_bar")
        p.add_argument("--workers", type=int)

    common(sub.add_parser("er-report"))
    common(sub.add_parser("jack-report"))

    pv = sub.add_parser("verify")
    pv.add_argument("--config")
    pv.add_argument("--out")
    pv.add_argument("--seed", type=int)
    pv.add_argument("--perturb-kerov", type=float, default=0.0, dest="perturb_kerov")

    pr = sub.add_parser("recursion")
    pr.add_argument("--q", type=float, required=True)
    pr.add_argument("--c", type=float, required=True)
    pr.add_argument("--n", type=int, default=10)
    pr.add_argument("--chain", type=int)

    ph = sub.add_parser("hyp")
    ph.add_argument("--params", required=True, help="N,m,n")
    ph.add_argument("--k", type=int)
    ph.add_argument("--t", type=float)
    ph.add_argument("--moment", type=int)
    return top


DEFAULTS = {
    "samples": 10_000,
    "seed": 1,
    "confidence": 0.05,
    "epsilon": 0.4,
    "format": "csv",
    "out": None,
    "workers": 1,
}


def _assemble_config(args: argparse.Namespace) -> dict:
    config = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_conf = _parse_config_file(args.config)
        for key, value in file_conf.items():
            if key in ("samples", "seed", "workers"):
                config[key] = int(value)
            elif key in ("confidence", "epsilon"):
                config[key] = float(value)
            elif key == "thresholds":
                config[key] = _parse_thresholds(value)
            else:
                config[key] = value
    for key in ("grid", "samples", "seed", "confidence", "epsilon", "out", "format", "workers"):
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if getattr(args, "thresholds", None):
        config["thresholds"] = _parse_thresholds(args.thresholds)
    config.setdefault("thresholds", None)
    if isinstance(config.get("thresholds"), str):
        config["thresholds"] = _parse_thresholds(config["thresholds"])
    return config


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "er-report":
            config = _assemble_config(args)
            if not config.get("grid"):
                raise ConfigError("er-report requires --grid")
            if config["samples"] < 100:
                raise ConfigError("need samples >= 100")
            return run_er_report(config)
        if args.command == "jack-report":
            config = _assemble_config(args)
            if not config.get("grid"):
                raise ConfigError("jack-report requires --grid")
            if config["samples"] < 100:
                raise ConfigError("need samples >= 100")
            return run_jack_report(config)
        if args.command == "verify":
            config = {"out": args.out, "perturb_kerov": args.perturb_kerov}
            code, _ = run_verify_suite(config)
            return code
        if args.command == "recursion":
            return run_recursion({"q": args.q, "c": args.c, "n": args.n, "chain": args.chain})
        if args.command == "hyp":
            fields = [int(x) for x in args.params.split(",")]
            if len(fields) != 3:
                raise ConfigError("hyp --params needs N,m,n")
            return run_hyp({"params": tuple(fields), "k": args.k, "t": args.t, "moment": args.moment})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
