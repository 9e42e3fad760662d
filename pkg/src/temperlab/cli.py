"""Command-line driver: ``temperlab <command> ...``.

Exit codes: 0 success (or a passing check), 2 indeterminate verdict,
1 errors and failing checks, 64 usage errors.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from temperlab import __version__
from temperlab.beta_solver import (
    IllPosedPairError,
    PairSpec,
    Verdict,
    beta_exact,
    beta_sample_oracle,
    p_from_theta,
    verdict_from_exponent,
)
from temperlab.catalog import catalog_entries, catalog_entry
from temperlab.config import get_settings
from temperlab.delta_estimator import (
    BRACKET_MARGIN,
    delta_discrete,
    delta_reductive_quadrature,
    delta_verdict,
)
from temperlab.harmonic import (
    QuadratureConfig,
    VerificationReport,
    check_spherical_bounds,
    check_weyl_invariance,
    default_bumps,
    estimate_theta_ray,
    haar_crosscheck,
    spherical,
    to_csv,
    volume_decay_conjugation,
    volume_growth_bgb,
)
from temperlab.matgroup import (
    ChartBox,
    DiscreteGenerators,
    GroupElement,
    load_generators,
)
from temperlab.numbers import format_fraction

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INDETERMINATE = 2
EXIT_USAGE = 64

# the exponent identities a verdict rests on
IDENTITY_MAIN = "theta = delta = 1 - 1/p for every closed subgroup H"
IDENTITY_REDUCTIVE = "theta = delta = beta for reductive H"
IDENTITY_CONNECTED = "L2(G/H) tempered iff beta <= 1/2 for connected H"
IDENTITY_DISCRETE = "theta = delta = max(sup psi / 2 rho, 0) for discrete H"
IDENTITY_TEMPERED = "L2(G/H) tempered iff delta <= 1/2"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def normalize(obj):
    """JSON-ready copy: 12 significant digits, exact rationals as strings."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, enum.Enum):
        return normalize(obj.value)
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}") + 0.0
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [normalize(v) for v in obj]
    return str(obj)


def dumps(report: dict) -> str:
    return json.dumps(normalize(report), sort_keys=True, indent=2) + "\n"


_BULKY = ("series", "shells")


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            if k in _BULKY:
                continue
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and obj and all(isinstance(x, dict) for x in obj):
        for i, x in enumerate(obj):
            yield from _flatten(x, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _cell(value) -> str:
    return value if isinstance(value, str) else json.dumps(value)


def render_table(report: dict) -> str:
    data = normalize(report)
    if isinstance(data.get("entries"), list):
        cols = ["name", "n", "expected_beta", "reductive", "discrete", "description"]
        rows = [cols] + [[_cell(e.get(c)) for c in cols] for e in data["entries"]]
        widths = [max(len(r[i]) for r in rows) for i in range(len(cols))]
        return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in rows)
    rows = [(key, _cell(value)) for key, value in _flatten(data)]
    width = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


def render_csv(report: dict, verification: VerificationReport | None = None) -> str:
    if verification is not None:
        return to_csv(verification)
    data = normalize(report)
    buf = io.StringIO()
    if "series" in data and isinstance(data["series"], list) and data["series"]:
        keys = sorted(data["series"][0])
        buf.write(",".join(keys) + "\n")
        for row in data["series"]:
            buf.write(",".join(str(row[k]) for k in keys) + "\n")
        return buf.getvalue()
    if "shells" in data and data["shells"]:
        buf.write("R,N\n")
        for row in data["shells"]:
            buf.write(f"{row['R']},{row['N']}\n")
        return buf.getvalue()
    buf.write("key,value\n")
    writer = csv.writer(buf, lineterminator="\n")
    for key, value in _flatten(data):
        writer.writerow([key, _cell(value)])
    return buf.getvalue()


def _envelope(command: str, seed, tolerances: dict, identity, body: dict) -> dict:
    out = dict(body)
    out.update({
        "command": command,
        "version": __version__,
        "seed": seed,
        "tolerances": tolerances,
        "identity": identity,
    })
    return out


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------


def _load_pair(args):
    """(PairSpec or None, CatalogEntry or None)."""
    if getattr(args, "pair_file", None):
        return PairSpec.from_json(args.pair_file), None
    if getattr(args, "pair", None):
        entry = catalog_entry(args.pair)
        return entry.pair, entry
    raise UsageError("one of --pair or --pair-file is required")


def _float_list(text: str) -> list:
    return [float(Fraction(x.strip())) for x in text.split(",") if x.strip()]


def _chi(text: str):
    vals = _float_list(text)
    return vals[0] if len(vals) == 1 else np.array(vals)


def _generators(args) -> DiscreteGenerators:
    gens = load_generators(args.generators)
    if getattr(args, "float", False) and gens.exact:
        gens = DiscreteGenerators(tuple(GroupElement(g.matrix, exact=False) for g in gens.gens), exact=False)
    return gens


def _tolerances(**extra) -> dict:
    s = get_settings()
    out = {"det_tol": s.det_tol, "dedup_grid": s.dedup_grid, "dedup_audit": s.dedup_audit}
    out.update(extra)
    return out


def _schedule(args, entry) -> tuple:
    if args.schedule:
        return tuple(int(x) for x in args.schedule.split(","))
    if args.depth is not None:
        k = int(args.depth)
        return tuple(sorted({d for d in (k - 8, k - 4, k) if d >= 1}))
    if entry is not None and entry.depth_schedule:
        return entry.depth_schedule
    return (8, 12, 16)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _beta_body(pair: PairSpec, entry, exact: bool, samples: int, seed: int) -> tuple:
    identity = IDENTITY_REDUCTIVE if entry is not None and entry.reductive else IDENTITY_CONNECTED
    body = {"pair": entry.name if entry is not None else pair.label, "dim": pair.dim}
    if identity is IDENTITY_CONNECTED:
        # without reductivity beta matches theta and delta only through max(., 1/2)
        body["scope"] = "verdict only; beta, delta and theta agree through max(., 1/2)"
    if exact:
        beta, ray = beta_exact(pair)
        kind = "beta-reductive" if entry is not None and entry.reductive else "beta-algebraic"
        body.update(beta=beta, witness_ray=list(ray), verdict=verdict_from_exponent(beta, kind), method="exact")
        if entry is not None and entry.expected_beta is not None:
            body["expected_beta"] = entry.expected_beta
            body["matches_expected"] = beta == entry.expected_beta
    if samples > 0 or not exact:
        oracle = beta_sample_oracle(pair, max(samples, 1), seed)
        body["oracle_beta"] = oracle
        body["oracle_samples"] = max(samples, 1)
        if not exact:
            body.update(beta=oracle, method="sampled lower bound",
                        verdict=verdict_from_exponent(oracle, "beta-algebraic", error_bar=0.02))
    return body, identity


def cmd_beta(args):
    pair, entry = _load_pair(args)
    if pair is None:
        raise ValueError(f"{entry.name} is discrete and has no weight data; use the delta command")
    samples = 100_000 if args.samples is None else args.samples
    body, identity = _beta_body(pair, entry, not args.float, samples, args.seed)
    report = _envelope("beta", args.seed, _tolerances(oracle_window=0.02), identity, body)
    code = EXIT_INDETERMINATE if body["verdict"] is Verdict.INDETERMINATE else EXIT_OK
    return report, code, None


def _delta_body(args, entry, pair):
    if getattr(args, "generators", None):
        gens = _generators(args)
        est = delta_discrete(gens, _schedule(args, entry), margin=args.margin)
        return est.to_json(args.seed), delta_verdict(est), IDENTITY_DISCRETE
    if entry is not None and entry.discrete:
        gens = entry.h_spec
        if getattr(args, "float", False):
            gens = DiscreteGenerators(tuple(GroupElement(g.matrix, exact=False) for g in gens.gens), exact=False)
        est = delta_discrete(gens, _schedule(args, entry), margin=args.margin)
        return est.to_json(args.seed), delta_verdict(est), IDENTITY_DISCRETE
    if entry is not None and entry.reductive and pair is not None:
        est = delta_reductive_quadrature(pair, entry.embedding, seed=args.seed)
        body = est.to_json(args.seed)
        body.pop("shells", None)
        return body, delta_verdict(est), IDENTITY_REDUCTIVE
    raise ValueError("delta needs --generators, a discrete catalog entry, or a reductive catalog entry")


def cmd_delta(args):
    entry = catalog_entry(args.pair) if args.pair else None
    pair = entry.pair if entry is not None else None
    body, verdict, identity = _delta_body(args, entry, pair)
    body["verdict"] = verdict
    report = _envelope("delta", args.seed, _tolerances(bracket_margin=args.margin), [identity, IDENTITY_TEMPERED], body)
    return report, EXIT_INDETERMINATE if verdict is Verdict.INDETERMINATE else EXIT_OK, None


def _theta_body(entry, args, samples):
    ray = _float_list(args.ray) if args.ray else [float(x) for x in entry.theta_ray]
    cfg = QuadratureConfig(mc_samples=samples, seed=args.seed, t_points=args.t_points)
    t_max = entry.theta_tmax if args.tmax is None else args.tmax
    est = estimate_theta_ray(entry.h_spec, ray, t_max=t_max, cfg=cfg, depth=args.ball_depth)
    body = est.to_json()
    body["ray"] = ray
    body["pair"] = entry.name
    return body, est


def cmd_theta(args):
    if not args.pair:
        raise UsageError("theta needs --pair")
    entry = catalog_entry(args.pair)
    samples = 200_000 if args.samples is None else args.samples
    body, est = _theta_body(entry, args, samples)
    report = _envelope("theta", args.seed, _tolerances(fit_window="upper half of the t-grid"),
                       [IDENTITY_MAIN, "p reported as 1 / (1 - max(theta, 1/2))"], body)
    return report, EXIT_INDETERMINATE if est.status != "ok" else EXIT_OK, None


def cmd_spherical(args):
    n = args.n
    chi = _chi(args.chi)
    ray = np.array(_float_list(args.ray)) if args.ray else np.array([1.0] + [0.0] * (n - 2) + [-1.0])
    if len(ray) != n:
        raise ValueError(f"ray must have {n} entries")
    g = np.diag(np.exp(args.t * ray))
    cfg = QuadratureConfig(node_count=args.nodes, mc_samples=args.samples or 200_000, seed=args.seed)
    value = spherical(chi, g, cfg)
    body = {"n": n, "chi": chi, "t": args.t, "ray": ray, "value": value, "config": cfg.to_json()}
    report = _envelope("spherical", args.seed, _tolerances(), "Xi_chi(g) = int_K exp(-(chi + rho) eta(g^-1 k)) dk", body)
    return report, EXIT_OK, None


def _verify_report(args) -> VerificationReport:
    kind = args.check
    seed = args.seed
    if kind == "haar":
        cfg = QuadratureConfig(seed=seed)
        return haar_crosscheck(default_bumps(), cfg, nodes=args.nodes or 64,
                               tolerance=0.01 if args.tol is None else args.tol)
    if kind == "volume-decay":
        if args.n != 2:
            raise ValueError("volume-decay runs for n = 2")
        cfg = QuadratureConfig(mc_samples=args.samples or 1_000_000, seed=seed)
        box = ChartBox.cube(2, args.radius if args.radius is not None else 0.3)
        return volume_decay_conjugation(box, (1.0, -1.0), args.tmax if args.tmax is not None else 6.0, cfg,
                                        factor=3.0 if args.tol is None else args.tol)
    if kind == "volume-growth":
        cfg = QuadratureConfig(seed=seed)
        return volume_growth_bgb((1.0, -1.0), args.tmax if args.tmax is not None else 8.0,
                                 args.radius if args.radius is not None else 1.0, cfg,
                                 spread_tol=50.0 if args.tol is None else args.tol)
    if kind == "spherical-bounds":
        cfg = QuadratureConfig(node_count=args.nodes or 2048, seed=seed)
        if args.n != 2:
            raise ValueError("spherical-bounds runs for n = 2")
        return check_spherical_bounds(_chi(args.chi), (1.0, -1.0), args.tmax if args.tmax is not None else 10.0,
                                      cfg, lower_tol=1e-6 if args.tol is None else args.tol)
    if kind == "weyl":
        cfg = QuadratureConfig(node_count=args.nodes or 2048, seed=seed)
        return check_weyl_invariance(_chi(args.chi), args.count, cfg,
                                     tolerance=1e-5 if args.tol is None else args.tol)
    raise UsageError(f"unknown check {kind!r}")


def cmd_verify(args):
    rep = _verify_report(args)
    body = rep.to_json()
    report = _envelope("verify", args.seed, _tolerances(check_tolerance=rep.tolerance, slack=rep.slack),
                       "numerical check (no exponent identity)", body)
    return report, EXIT_OK if rep.passed else EXIT_ERROR, rep


def cmd_catalog(args):
    if args.action == "list":
        rows = [{"name": e.name, "n": e.n, "expected_beta": e.expected_beta, "reductive": e.reductive,
                 "discrete": e.discrete, "description": e.description} for e in catalog_entries()]
        report = _envelope("catalog", None, {}, None, {"entries": rows})
        return report, EXIT_OK, None
    if not args.name:
        raise UsageError("catalog show needs an entry name")
    report = _envelope("catalog", None, {}, None, catalog_entry(args.name).to_json())
    return report, EXIT_OK, None


def cmd_report(args):
    """beta, delta, theta and p for one catalog entry, with cross-checks."""
    if not args.pair:
        raise UsageError("report needs --pair")
    entry = catalog_entry(args.pair)
    body = {"pair": entry.name, "n": entry.n, "description": entry.description}
    identities = [IDENTITY_MAIN, IDENTITY_TEMPERED]
    checks = {}
    if entry.pair is not None:
        samples = 100_000 if args.samples is None else args.samples
        beta_body, ident = _beta_body(entry.pair, entry, True, samples, args.seed)
        body["beta"] = beta_body
        identities.append(ident)
        checks["oracle_within_window"] = bool(beta_body["beta"] - Fraction(1, 50) - Fraction(1, 10**12)
                                              <= Fraction(beta_body["oracle_beta"]) <= beta_body["beta"]
                                              + Fraction(1, 10**12))
    delta_verdict_value = None
    if entry.discrete or entry.reductive:
        args.generators = None
        dbody, dverdict, ident = _delta_body(args, entry, entry.pair)
        dbody.pop("shells", None)
        body["delta"] = dbody
        identities.append(ident)
        delta_verdict_value = dverdict
        if entry.reductive and entry.pair is not None and isinstance(dbody.get("delta"), float):
            gap = abs(dbody["delta"] - float(body["beta"]["beta"]))
            checks["delta_minus_beta"] = gap
            checks["delta_matches_beta"] = gap <= 0.05
    theta_samples = 200_000 if args.samples is None else args.samples
    if entry.n in (2, 3):
        try:
            tbody, est = _theta_body(entry, args, theta_samples)
            body["theta"] = tbody
        except (ValueError, NotImplementedError) as exc:
            body["theta"] = {"status": "unsupported", "reason": str(exc)}
    if entry.pair is not None and (entry.reductive or not entry.discrete):
        # exact beta decides: theta = delta = beta (reductive) or the connected-H criterion
        verdict = body["beta"]["verdict"]
        if entry.reductive:
            body["p"] = p_from_theta(min(body["beta"]["beta"], Fraction(1)))
    elif delta_verdict_value is not None:
        verdict = delta_verdict_value
    else:
        verdict = Verdict.INDETERMINATE
    body["verdict"] = verdict
    if "delta" in body and isinstance(body["delta"].get("delta"), float) and not math.isnan(body["delta"]["delta"]):
        d = min(max(body["delta"]["delta"], 0.0), 1.0)
        body["p_from_delta"] = p_from_theta(d)
    body["checks"] = checks
    identities = list(dict.fromkeys(identities))
    report = _envelope("report", args.seed, _tolerances(oracle_window=0.02, delta_beta_window=0.05,
                                                        bracket_margin=args.margin), identities, body)
    return report, EXIT_INDETERMINATE if verdict is Verdict.INDETERMINATE else EXIT_OK, None


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--format", choices=("json", "table", "csv"), default="json")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="float", action="store_false", default=False)
    mode.add_argument("--float", dest="float", action="store_true")

    pair_opts = _Parser(add_help=False)
    pair_opts.add_argument("--pair", default=None, help="catalog entry name")
    pair_opts.add_argument("--pair-file", default=None, help="PairSpec JSON file")

    parser = _Parser(prog="temperlab", description="Temperedness exponents for homogeneous spaces of SL(n, R).")
    parser.add_argument("--version", action="version", version=f"temperlab {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sub.add_parser("beta", parents=[common, pair_opts], help="exact local volume decay exponent")

    p = sub.add_parser("delta", parents=[common, pair_opts], help="volume growth exponent")
    p.add_argument("--generators", default=None, help="generator JSON file")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--schedule", default=None, help="comma-separated increasing depths")
    p.add_argument("--margin", type=float, default=BRACKET_MARGIN)

    p = sub.add_parser("theta", parents=[common, pair_opts], help="fitted uniform decay exponent")
    _theta_options(p)

    p = sub.add_parser("spherical", parents=[common], help="evaluate a spherical function at exp(t ray)")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--chi", default="0")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--ray", default=None)
    p.add_argument("--nodes", type=int, default=2048)

    p = sub.add_parser("verify", parents=[common], help="numerical checks")
    p.add_argument("check", choices=("haar", "volume-decay", "volume-growth", "spherical-bounds", "weyl"))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--chi", default="0")
    p.add_argument("--tmax", type=float, default=None)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--count", type=int, default=16)

    p = sub.add_parser("catalog", parents=[common], help="list or show catalog entries")
    p.add_argument("action", choices=("list", "show"))
    p.add_argument("name", nargs="?")

    p = sub.add_parser("report", parents=[common, pair_opts], help="full report for a catalog entry")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--schedule", default=None)
    p.add_argument("--margin", type=float, default=BRACKET_MARGIN)
    _theta_options(p)
    return parser


def _theta_options(p):
    p.add_argument("--ray", default=None, help="comma-separated dominant ray")
    p.add_argument("--tmax", type=float, default=None, help="end of the t-grid (catalog default)")
    p.add_argument("--t-points", type=int, default=32)
    p.add_argument("--ball-depth", type=int, default=8, help="orbit-ball depth for discrete H")


COMMANDS = {
    "beta": cmd_beta,
    "delta": cmd_delta,
    "theta": cmd_theta,
    "spherical": cmd_spherical,
    "verify": cmd_verify,
    "catalog": cmd_catalog,
    "report": cmd_report,
}


def run_command(argv, stdout=None, stderr=None) -> int:
    """Run one command; the report goes to ``stdout``, diagnostics to ``stderr``."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
        if args.command is None:
            raise UsageError(parser.format_usage().rstrip() + "\ntemperlab: error: a command is required")
        report, code, verification = COMMANDS[args.command](args)
    except UsageError as exc:
        stderr.write(str(exc).rstrip() + "\n")
        return EXIT_USAGE
    except SystemExit as exc:
        # --help and --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (ValueError, KeyError, RuntimeError, OSError, IllPosedPairError, json.JSONDecodeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        stderr.write(f"temperlab: error: {msg}\n")
        return EXIT_ERROR
    fmt = args.format
    if fmt == "table":
        stdout.write(render_table(report))
    elif fmt == "csv":
        stdout.write(render_csv(report, verification))
    else:
        stdout.write(dumps(report))
    return code


def main(argv=None) -> int:
    code = run_command(sys.argv[1:] if argv is None else argv)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
