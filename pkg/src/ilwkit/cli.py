"""Batch experiment driver: energies, limits, flows, ensembles, reports.

Every command resolves its parameters from flags plus an optional JSON
config file (flags win), runs one experiment, prints a human summary with
one PASS/FAIL line per declared check, and writes machine-readable
artifacts (a JSON report embedding the resolved config, seed, and toolkit
version, plus CSV tables documented in docs/csv_schema.md).  Reports are
byte-identical across runs of the same (config, seed); files are written
atomically; the exit code is 0 only when every requested check passes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from fractions import Fraction

import click
import numpy as np

from . import __version__, dynamics, measures, rng, spectral
from .hierarchy import canonicalize_integrated, re_part
from .hierarchy.energies import (
    a_coeff,
    energy_bo,
    energy_deep,
    energy_kdv,
    energy_shallow,
)
from .hierarchy.evaluate import evaluate
from .hierarchy.quad import (
    deep_quadratic_reference,
    kdv_quadratic_reference,
    quadratic_part,
    shallow_quadratic_reference,
)
from .hierarchy.recursions import chi_deep, h_kdv, h_tilde, parity_flag

# Check constants declared once, referenced by reports
SLOPE_THRESHOLD = 0.1
KL_THRESHOLD = 1.0e-3
RATIO_BAND = 0.25
AUDIT_RATIO_BAND = (2.5, 5.5)
TWO_PAIR_TOL = 1.0e-12
DRIFT_SIGMA = 3.0


# --- plumbing ---------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.part{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())


class Harness:
    """Config resolution, check accounting, and artifact emission."""

    def __init__(self, ctx: click.Context, name: str):
        self.name = name
        self.checks: list[dict] = []
        params = dict(ctx.params)
        config_path = params.pop("config", None)
        if config_path:
            with open(config_path) as fh:
                overrides = json.load(fh)
            for key, value in overrides.items():
                pkey = key.replace("-", "_")
                if pkey not in params:
                    raise click.UsageError(f"unknown config key {key!r}")
                source = ctx.get_parameter_source(pkey)
                if source is not click.core.ParameterSource.COMMANDLINE:
                    params[pkey] = value
        self.params = params
        out = params.pop("out", None) or "."
        os.makedirs(out, exist_ok=True)
        self.out = out
        tag = params.pop("tag", "")
        self.stem = name if not tag else f"{name}_{tag}"

    def check(self, label: str, passed: bool, detail: str = "") -> bool:
        self.checks.append({"name": label, "passed": bool(passed), "detail": detail})
        state = "PASS" if passed else "FAIL"
        line = f"[{state}] {label}"
        if detail:
            line += f": {detail}"
        click.echo(line)
        return passed

    def path(self, suffix: str) -> str:
        return os.path.join(self.out, f"{self.stem}{suffix}")

    def finish(self, results: dict) -> None:
        passed = all(c["passed"] for c in self.checks)
        report = {
            "command": self.name.replace("_", " "),
            "version": __version__,
            "config": self.params,
            "results": results,
            "checks": self.checks,
            "passed": passed,
        }
        path = self.path(".json")
        _atomic_write(path, json.dumps(report, indent=1, sort_keys=True) + "\n")
        click.echo(f"report: {path}")
        if not passed:
            raise SystemExit(1)


def _common(fn):
    fn = click.option(
        "--out",
        envvar="ILW_OUTPUT_DIR",
        default=None,
        help="Output directory (default: $ILW_OUTPUT_DIR or the cwd).",
    )(fn)
    fn = click.option(
        "--config",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="JSON file of parameter overrides; explicit flags win.",
    )(fn)
    fn = click.option("--tag", default="", help="Suffix for artifact file names.")(fn)
    return fn


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad float list {text!r}: {exc}")


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad integer list {text!r}: {exc}")


def _parse_modes(text: str) -> dict[int, complex]:
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        try:
            key, val = part.split(":")
            out[int(key)] = complex(val)
        except ValueError as exc:
            raise click.UsageError(f"bad mode entry {part!r}: {exc}")
    if not out:
        raise click.UsageError("empty mode list")
    return out


def _field_from_modes(modes: dict[int, complex], cutoff: int | None = None):
    field = spectral.synthesize(modes)
    if cutoff is not None and cutoff > field.cutoff:
        field = field.padded(cutoff)
    return field


_ENERGY_BUILDERS = {
    "deep": energy_deep,
    "bo": energy_bo,
    "shallow": energy_shallow,
    "kdv": energy_kdv,
}

_OP_NAMES = {"h": "H", "g": "G", "gt": "Gt", "q": "Q", "qt": "Qt", "dx": "dx", "pn": "Phigh"}


def _render_expr(e: tuple) -> str:
    if e == ("u",):
        return "u"
    if e[0] == "ap":
        return f"{_OP_NAMES[e[1]]}[{_render_expr(e[2])}]"
    if e[0] == "pr":
        return " * ".join(_render_expr(f) for f in e[1])
    raise ValueError(f"unrenderable expression {e!r}")


def _render_mono(m) -> str:
    pieces = []
    coeff = m.coeff
    sign = "+" if coeff >= 0 else "-"
    pieces.append(str(abs(coeff)))
    if m.ipow % 2:
        pieces.append("i")
    if m.dpow:
        pieces.append(f"delta^{m.dpow}" if m.dpow != 1 else "delta")
    body = _render_expr(m.body)
    return f"{sign} {' * '.join(pieces)} * Int {body} dx"


# --- command group ----------------------------------------------------------


@click.group()
@click.version_option(version=__version__, prog_name="ilw")
def main():
    """Conservation-law hierarchy toolkit for ILW, BO, and KdV."""


@main.group()
def conslaw():
    """Symbolic conservation laws: display and identity suite."""


@conslaw.command("show")
@click.option("--regime", type=click.Choice(list(_ENERGY_BUILDERS)), required=True)
@click.option("--k", type=int, required=True, help="Hierarchy index (kdv: level).")
@click.option("--delta", default="sym", help="'sym' or a depth to fold numerically.")
@click.option("--variant", type=click.Choice(["g", "q"]), default="g")
@_common
@click.pass_context
def conslaw_show(ctx, **_):
    harness = Harness(ctx, "conslaw_show")
    p = harness.params
    builder = _ENERGY_BUILDERS[p["regime"]]
    if p["regime"] == "deep":
        density = builder(p["k"], p["variant"])
    else:
        density = builder(p["k"])
    click.echo(
        f"{p['regime']} energy, index {p['k']}"
        f" (rank {density.declared_rank}), {len(density.monos)} terms:"
    )
    terms = []
    numeric_delta = None if p["delta"] == "sym" else float(p["delta"])
    for m in density.monos:
        line = _render_mono(m)
        entry = {
            "coeff": [m.coeff.numerator, m.coeff.denominator],
            "ipow": m.ipow,
            "dpow": m.dpow,
            "body": _render_expr(m.body),
        }
        if numeric_delta is not None:
            folded = float(m.coeff) * numeric_delta**m.dpow
            entry["coeff_at_delta"] = folded
            line += f"   [coeff at delta={numeric_delta:g}: {folded:.6g}]"
        click.echo(f"  {line}")
        terms.append(entry)
    harness.finish({"rank": str(density.declared_rank), "terms": terms})


@conslaw.command("verify")
@click.option("--nmax", type=int, default=8, show_default=True)
@click.option("--kdvmax", type=int, default=4, show_default=True)
@click.option("--kmax", type=int, default=10, show_default=True)
@_common
@click.pass_context
def conslaw_verify(ctx, **_):
    """Exact identity suite for the symbolic layer."""
    harness = Harness(ctx, "conslaw_verify")
    p = harness.params
    ok = all(
        sum(a_coeff(k, l) for l in range(0, k + 1, 2)) == 1
        for k in range(1, p["kmax"] + 1)
    )
    harness.check(f"quadratic table rows sum to 1 (k <= {p['kmax']})", ok)
    for n in range(1, p["nmax"] + 1):
        got = quadratic_part(re_part(canonicalize_integrated(chi_deep(n))))
        harness.check(
            f"deep recursion quadratic part, order {n}",
            got == deep_quadratic_reference(n),
        )
    for n in range(1, p["nmax"] + 1):
        got = quadratic_part(re_part(canonicalize_integrated(h_tilde(n))))
        harness.check(
            f"shallow recursion quadratic part, order {n}",
            got == shallow_quadratic_reference(n),
        )
    for n in range(0, p["kdvmax"] + 1):
        harness.check(
            f"kdv odd order {2 * n + 1} integrates to zero",
            re_part(canonicalize_integrated(h_kdv(2 * n + 1))).is_zero(),
        )
    for n in range(1, p["kdvmax"] + 1):
        got = quadratic_part(re_part(canonicalize_integrated(h_kdv(2 * n))))
        harness.check(
            f"kdv even order {2 * n} is the signed norm",
            got == kdv_quadratic_reference(n),
        )
    for k in range(1, 7):
        harness.check(
            f"deep energy rank, index {k}",
            energy_deep(k).rank_check() == Fraction(k, 2) + 2,
        )
        harness.check(
            f"shallow energy rank, index {k}",
            energy_shallow(k).rank_check()
            == Fraction(k, 2) + 2 - Fraction(parity_flag(k), 2),
        )
    harness.finish({"checks_run": len(harness.checks)})


# --- limits -----------------------------------------------------------------


@main.group()
def limits():
    """Energy convergence tables toward the limiting equations."""


@limits.command("deep")
@click.option("--k", type=int, required=True)
@click.option("--delta", default="8,16,32,64", show_default=True)
@click.option("--modes", default="1:0.3,2:0.1j", show_default=True)
@click.option("--ratio-band", type=float, default=RATIO_BAND, show_default=True)
@_common
@click.pass_context
def limits_deep(ctx, **_):
    """Gap |E^delta(u) - E^BO(u)| over a depth ladder (halves as delta doubles)."""
    harness = Harness(ctx, "limits_deep")
    p = harness.params
    deltas = _parse_floats(p["delta"])
    field = _field_from_modes(_parse_modes(p["modes"]))
    k = p["k"]
    bo_val = evaluate(energy_bo(k), field, math.inf)
    rows = []
    gaps = []
    for delta in deltas:
        gap = abs(evaluate(energy_deep(k), field, delta) - bo_val)
        ratio = gap / gaps[-1] if gaps else float("nan")
        gaps.append(gap)
        rows.append([delta, gap, ratio])
    _write_csv(harness.path(".csv"), ["delta", "gap", "ratio_to_previous"], rows)
    harness.check("gap decreases along the ladder", all(np.diff(gaps) < 0))
    band = p["ratio_band"]
    for (da, db), ratio in zip(zip(deltas, deltas[1:]), [r[2] for r in rows[1:]]):
        if abs(db / da - 2.0) < 1e-12:
            harness.check(
                f"gap halves from delta={da:g} to {db:g}",
                0.5 * (1 - band) <= ratio <= 0.5 * (1 + band),
                f"ratio {ratio:.4f}",
            )
    harness.finish({"bo_value": bo_val, "gaps": gaps})


@limits.command("shallow")
@click.option("--kappa", type=int, required=True)
@click.option("--delta", default="0.5,0.1,0.02,0.004", show_default=True)
@click.option("--modes", default="1:0.3,2:0.1j", show_default=True)
@click.option("--final-rel", type=float, default=0.01, show_default=True)
@_common
@click.pass_context
def limits_shallow(ctx, **_):
    """Both shallow parities collapse onto the same KdV energy as delta -> 0."""
    harness = Harness(ctx, "limits_shallow")
    p = harness.params
    deltas = _parse_floats(p["delta"])
    field = _field_from_modes(_parse_modes(p["modes"]))
    kappa = p["kappa"]
    kdv_val = evaluate(energy_kdv(kappa), field, 0.0)
    odd, even = [], []
    rows = []
    for delta in deltas:
        gap_odd = abs(evaluate(energy_shallow(2 * kappa - 1), field, delta) - kdv_val)
        gap_even = abs(evaluate(energy_shallow(2 * kappa), field, delta) - kdv_val)
        odd.append(gap_odd)
        even.append(gap_even)
        rows.append(
            [
                delta,
                gap_odd,
                gap_even,
                gap_odd / abs(kdv_val),
                gap_even / abs(kdv_val),
            ]
        )
    _write_csv(
        harness.path(".csv"),
        ["delta", "gap_odd", "gap_even", "rel_gap_odd", "rel_gap_even"],
        rows,
    )
    harness.check("odd-index gap decreases", all(np.diff(odd) < 0))
    harness.check("even-index gap decreases", all(np.diff(even) < 0))
    harness.check(
        f"final gaps below {p['final_rel']:g} of the KdV value",
        max(odd[-1], even[-1]) < p["final_rel"] * abs(kdv_val),
        f"odd {odd[-1] / abs(kdv_val):.2e}, even {even[-1] / abs(kdv_val):.2e}",
    )
    harness.finish({"kdv_value": kdv_val, "gap_odd": odd, "gap_even": even})


# --- simulate ---------------------------------------------------------------

_SIM_ENERGIES = {
    "ilw": ("deep", energy_deep),
    "bo": ("deep", energy_bo),
    "silw": ("shallow", energy_shallow),
    "kdv": ("kdv", energy_kdv),
}


@main.command("simulate")
@click.option("--family", type=click.Choice(list(dynamics.FAMILIES)), required=True)
@click.option("--delta", type=float, default=math.inf, show_default=True)
@click.option("--resolution", type=int, default=128, show_default=True)
@click.option("--truncation", type=int, default=None)
@click.option("--dt", type=float, default=None, help="Step (default: stability bound).")
@click.option("--t-final", type=float, default=1.0, show_default=True)
@click.option("--record-stride", type=int, default=1, show_default=True)
@click.option("--k-list", default="0,1,2", show_default=True)
@click.option("--modes", default=None, help="Explicit initial data, e.g. '1:0.3,2:0.1j'.")
@click.option("--random-modes", type=int, default=None, help="Seeded 1/n profile width.")
@click.option("--amplitude", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--expect-drift", default="", help="Indices that must drift instead.")
@click.option("--drift-floor", type=float, default=1e-4, show_default=True)
@_common
@click.pass_context
def simulate(ctx, **_):
    """Evolve one field and check which energies the flow conserves."""
    harness = Harness(ctx, "simulate")
    p = harness.params
    if (p["modes"] is None) == (p["random_modes"] is None):
        raise click.UsageError("give exactly one of --modes / --random-modes")
    if p["modes"] is not None:
        u0 = _field_from_modes(_parse_modes(p["modes"]))
    else:
        width = p["random_modes"]
        phases = rng.substream(p["seed"]).uniform(0.0, 2.0 * math.pi, width)
        u0 = spectral.SpectralField(
            np.concatenate(
                [[0.0], p["amplitude"] / np.arange(1, width + 1) * np.exp(1j * phases)]
            )
        )
    spec = dynamics.EvolutionSpec(
        p["family"],
        delta=p["delta"],
        resolution=p["resolution"],
        truncation=p["truncation"],
    )
    params = dynamics.IntegratorParams(
        t_final=p["t_final"], dt=p["dt"], record_stride=p["record_stride"]
    )
    traj = dynamics.evolve(spec, u0, params)
    regime, builder = _SIM_ENERGIES[p["family"]]
    ks = _parse_ints(p["k_list"])
    start = 1 if regime == "kdv" else 0
    energies, labels = [], []
    for k in ks:
        if k < start:
            raise click.UsageError(f"index {k} not defined for {p['family']}")
        energies.append(builder(k))
        labels.append(f"E{k}" if regime == "kdv" else f"E{Fraction(k, 2)}")
    traj.export_csv(harness.path(".csv"), energies=energies, labels=labels)
    rows = dynamics.conservation_report(traj, energies)
    drifting = set(_parse_ints(p["expect_drift"])) if p["expect_drift"] else set()
    results = []
    for k, label, row in zip(ks, labels, rows):
        results.append({"index": k, "label": label, **row})
        if k in drifting:
            harness.check(
                f"{label} drifts measurably under the truncated flow",
                row["max_rel_drift"] > p["drift_floor"],
                f"rel drift {row['max_rel_drift']:.3e}",
            )
        else:
            harness.check(
                f"{label} conserved to {p['tol']:g}",
                row["max_rel_drift"] < p["tol"],
                f"rel drift {row['max_rel_drift']:.3e}",
            )
    harness.finish({"steps": len(traj.times) - 1, "energies": results})


# --- measure ----------------------------------------------------------------


def _gaussian_spec(p) -> measures.GaussianSpec:
    return measures.GaussianSpec(p["regime"], p["k"], p["delta"])


@main.group()
def measure():
    """Gaussian ensemble sampling and measure comparisons."""


@measure.command("sample")
@click.option("--regime", type=click.Choice(list(measures.REGIMES)), required=True)
@click.option("--k", type=int, required=True)
@click.option("--delta", type=float, default=math.inf, show_default=True)
@click.option("--n", type=int, default=64, show_default=True)
@click.option("--samples", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--s-list", default="0,0.25,0.5", show_default=True)
@_common
@click.pass_context
def measure_sample(ctx, **_):
    """Monte Carlo Sobolev moments against the analytic mode sums."""
    harness = Harness(ctx, "measure_sample")
    p = harness.params
    spec = _gaussian_spec(p)
    s_list = _parse_floats(p["s_list"])
    fields = [
        measures.sample(spec, p["n"], p["seed"], i) for i in range(p["samples"])
    ]
    rows = []
    for s in s_list:
        vals = np.array([f.sobolev_norm(s) ** 2 for f in fields])
        exact = measures.expected_sobolev_sq(spec, p["n"], s)
        se = float(vals.std(ddof=1) / math.sqrt(p["samples"]))
        z = (float(vals.mean()) - exact) / se
        rows.append([s, float(vals.mean()), exact, se, z])
        harness.check(
            f"moment at s={s:g} within 3 standard errors",
            abs(z) < 3.0,
            f"z = {z:+.2f}",
        )
    _write_csv(
        harness.path(".csv"), ["s", "mc_mean", "analytic", "stderr", "zscore"], rows
    )
    harness.finish({"rows": [dict(zip(["s", "mc", "exact", "se", "z"], r)) for r in rows]})


@measure.command("kl")
@click.option("--k", type=int, required=True)
@click.option("--delta", default="2,8,32,128", show_default=True)
@click.option("--threshold", type=float, default=KL_THRESHOLD, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@_common
@click.pass_context
def measure_kl(ctx, **_):
    """Certified KL divergence from the depth-delta law to the deep limit."""
    harness = Harness(ctx, "measure_kl")
    p = harness.params
    deltas = _parse_floats(p["delta"])
    vals = [measures.kl_gaussian(p["k"], d, tol=p["tol"]) for d in deltas]
    _write_csv(harness.path(".csv"), ["delta", "kl"], list(map(list, zip(deltas, vals))))
    harness.check(
        "divergence strictly decreases in depth", all(np.diff(vals) < 0)
    )
    harness.check(
        f"final divergence below {p['threshold']:g}",
        vals[-1] < p["threshold"],
        f"kl({deltas[-1]:g}) = {vals[-1]:.3e}",
    )
    harness.finish({"delta": deltas, "kl": vals})


@measure.command("kakutani")
@click.option("--regime", type=click.Choice(["deep", "shallow"]), required=True)
@click.option("--k", type=int, required=True)
@click.option("--delta1", type=float, required=True)
@click.option("--delta2", type=float, required=True)
@click.option("--cutoff", type=int, default=100000, show_default=True)
@click.option("--threshold", type=float, default=SLOPE_THRESHOLD, show_default=True)
@click.option(
    "--expect", type=click.Choice(["divergent", "saturating"]), default=None
)
@_common
@click.pass_context
def measure_kakutani(ctx, **_):
    """Partial sums of the equivalence series for two depths of one law.

    A shallow comparison with delta2 = 0 and odd k runs against the
    collapsed KdV law of level (k+1)/2.  The growth verdict is a slope
    heuristic; finite sums never certify divergence.
    """
    harness = Harness(ctx, "measure_kakutani")
    p = harness.params
    spec_a = measures.GaussianSpec(p["regime"], p["k"], p["delta1"])
    if p["regime"] == "shallow" and p["delta2"] == 0 and p["k"] % 2 == 1:
        spec_b = measures.GaussianSpec("kdv", (p["k"] + 1) // 2)
    else:
        spec_b = measures.GaussianSpec(p["regime"], p["k"], p["delta2"])
    sums = measures.kakutani_partial_sums(spec_a, spec_b, p["cutoff"])
    verdict = measures.classify_growth(sums, p["threshold"])
    grid = np.unique(
        np.rint(np.logspace(0, math.log10(p["cutoff"]), 200)).astype(int)
    )
    _write_csv(
        harness.path(".csv"),
        ["cutoff", "partial_sum"],
        [[int(m), float(sums[m - 1])] for m in grid],
    )
    click.echo(
        f"slope {verdict['slope']:.4f} over the last decade -> "
        + ("divergent" if verdict["divergent"] else "saturating")
    )
    if p["expect"] is not None:
        harness.check(
            f"growth classified as {p['expect']}",
            verdict["divergent"] == (p["expect"] == "divergent"),
            f"slope {verdict['slope']:.4f} vs threshold {p['threshold']:g}",
        )
    harness.finish(
        {"final_sum": float(sums[-1]), "slope": verdict["slope"], **verdict}
    )


# --- asymptotic conservation ------------------------------------------------


@main.command("asymptotic")
@click.option("--regime", type=click.Choice(["deep", "shallow"]), required=True)
@click.option("--k", type=int, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--n-list", default="16,32,64,128", show_default=True)
@click.option("--p", "p_norm", type=float, default=2.0, show_default=True)
@click.option("--samples", type=int, default=256, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--audit", type=int, default=2, show_default=True)
@click.option("--audit-dt", type=float, default=1e-3, show_default=True)
@click.option("--min-exponent", type=float, default=0.2, show_default=True)
@_common
@click.pass_context
def asymptotic(ctx, **_):
    """Decay of the truncated-flow energy derivative in the Gaussian mean."""
    harness = Harness(ctx, "asymptotic")
    p = harness.params
    n_list = _parse_ints(p["n_list"])
    reports = []
    rows = []
    for n in n_list:
        rep = measures.asymptotic_conservation(
            p["regime"],
            p["k"],
            p["delta"],
            n,
            p["p_norm"],
            p["samples"],
            p["seed"],
            audit=p["audit"],
            audit_dt=p["audit_dt"],
        )
        reports.append(rep)
        rows.append([n, rep["estimate"], rep["stderr"], rep["moment"], rep["moment_stderr"]])
        click.echo(f"N={n}: statistic {rep['estimate']:.5f} +- {rep['stderr']:.5f}")
    _write_csv(
        harness.path(".csv"),
        ["n", "estimate", "stderr", "moment", "moment_stderr"],
        rows,
    )
    ests = [r["estimate"] for r in reports]
    harness.check("statistic decreases along the cutoffs", all(np.diff(ests) < 0))
    slope = float(np.polyfit(np.log(n_list), np.log(ests), 1)[0])
    harness.check(
        f"fitted decay exponent above {p['min_exponent']:g}",
        -slope > p["min_exponent"],
        f"exponent {-slope:.3f}",
    )
    lo, hi = AUDIT_RATIO_BAND
    for n, rep in zip(n_list, reports):
        for entry in rep["audit"]:
            ratio = entry["err"] / entry["err_half"] if entry["err_half"] > 0 else math.inf
            harness.check(
                f"finite-difference audit contracts at order dt^2 (N={n})",
                lo <= ratio <= hi,
                f"ratio {ratio:.2f}",
            )
        gspec = measures.GaussianSpec(p["regime"], p["k"], p["delta"])
        x = measures.sample(gspec, n, p["seed"], 0)
        weights = np.abs(x.positive) ** 2 * measures.t_vector(gspec, n)
        cancel = abs(measures.two_pair_sum(gspec, n, weights))
        harness.check(
            f"paired-frequency cancellation at N={n}",
            cancel <= TWO_PAIR_TOL,
            f"|sum| = {cancel:.2e}",
        )
    harness.finish({"n": n_list, "estimates": ests, "exponent": -slope})


# --- invariance -------------------------------------------------------------


@main.command("invariance")
@click.option("--regime", type=click.Choice(["deep", "shallow"]), required=True)
@click.option("--k", type=int, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--n-list", default="32,64", show_default=True)
@click.option("--t-final", type=float, default=1.0, show_default=True)
@click.option("--samples", type=int, default=768, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--big-k", type=float, default=None, help="Cutoff radius (default: auto).")
@click.option("--dt", type=float, default=5e-4, show_default=True)
@click.option("--shape", type=click.Choice(["smooth", "sharp"]), default="smooth")
@_common
@click.pass_context
def invariance(ctx, **_):
    """Weighted push-forward battery for the truncated Gibbs ensemble."""
    harness = Harness(ctx, "invariance")
    p = harness.params
    n_list = _parse_ints(p["n_list"])
    big_k = p["big_k"]
    if big_k is None:
        spec = measures.GaussianSpec(p["regime"], p["k"], p["delta"])
        big_k = math.sqrt(measures.expected_sobolev_sq(spec, max(n_list), 0.0))
    reports = []
    rows = []
    for n in n_list:
        rep = measures.invariance_battery(
            p["regime"],
            p["k"],
            p["delta"],
            count=n,
            t_final=p["t_final"],
            samples=p["samples"],
            seed=p["seed"],
            big_k=big_k,
            dt=p["dt"],
            cutoff_shape=p["shape"],
        )
        reports.append(rep)
        click.echo(
            f"N={n}: max |drift|/SE {rep['max_drift_over_se']:.2f}, "
            f"effective samples {rep['effective_samples']:.1f}"
        )
        for name, row in rep["observables"].items():
            rows.append(
                [
                    n,
                    name,
                    row["before"],
                    row["after"],
                    row["drift"],
                    row["stderr_before"],
                    row["stderr_after"],
                    row["stderr"],
                    row["stderr_paired"],
                    row["drift_over_se"],
                ]
            )
    _write_csv(
        harness.path(".csv"),
        [
            "n",
            "observable",
            "before",
            "after",
            "drift",
            "stderr_before",
            "stderr_after",
            "stderr",
            "stderr_paired",
            "drift_over_se",
        ],
        rows,
    )
    final = reports[-1]
    harness.check(
        f"battery drift within {DRIFT_SIGMA:g} standard errors at N={n_list[-1]}",
        final["max_drift_over_se"] < DRIFT_SIGMA,
        f"max |drift|/SE {final['max_drift_over_se']:.2f}",
    )
    if len(reports) >= 2:
        drifts = [
            max(abs(row["drift"]) for row in rep["observables"].values())
            for rep in reports
        ]
        harness.check(
            "drift estimate decreases with the cutoff",
            drifts[-1] < drifts[0],
            f"{drifts[0]:.3e} -> {drifts[-1]:.3e}",
        )
    harness.finish(
        {
            "n": n_list,
            "big_k": big_k,
            "max_drift_over_se": [r["max_drift_over_se"] for r in reports],
            "effective_samples": [r["effective_samples"] for r in reports],
        }
    )


if __name__ == "__main__":
    main()
