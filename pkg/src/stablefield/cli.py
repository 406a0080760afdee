"""Command line front end: JSON configs in, CSV and JSON reports out.

Every report embeds the sha256 of the resolved config and the master seed,
and identical (config, seed) pairs produce byte-identical files no matter
how many workers run the replicates.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache, partial
from typing import Optional

import numpy as np
from scipy import stats

from . import pointprocess as pp
from .geometry import (
    build_body,
    build_fiber_volume,
    geometry_report,
    scaling_constant,
)
from .lattice import GroupSpec, MathDomainError, analyze_quotient
from .simulate import (
    KernelModel,
    moving_average_model,
    partial_maxima,
    sample_field,
    substream,
)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

GOLDEN_TOL_ENV = "STABLEFIELD_GOLDEN_TOL"

_CONFIG_KEYS = {
    "groupSpec", "kernelModel", "nList", "replicates", "masterSeed",
    "truncationIndex", "gSuite", "outputDir", "scalingDiagnostics",
}


class ConfigError(ValueError):
    """A config document failed schema validation."""


def _plain_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class ExperimentConfig:
    group_dim: int
    kernel_rows: tuple
    kernel_model: Optional[dict]
    n_list: Optional[tuple]
    replicates: Optional[int]
    master_seed: int
    truncation_index: int
    g_suite: tuple
    output_dir: Optional[str]
    scaling_diagnostics: bool
    canonical: str
    config_hash: str

    @classmethod
    def from_payload(cls, payload):
        if not isinstance(payload, dict):
            raise ConfigError("the config document must be a JSON object")
        unknown = sorted(set(payload) - _CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

        group = payload.get("groupSpec")
        if not isinstance(group, dict) or not _plain_int(group.get("dim")):
            raise ConfigError("groupSpec needs an integer 'dim'")
        dim = group["dim"]
        if dim < 1:
            raise ConfigError("groupSpec.dim must be at least 1")
        extra = sorted(set(group) - {"dim", "kernel"})
        if extra:
            raise ConfigError(f"unknown groupSpec keys: {', '.join(extra)}")
        rows = group.get("kernel", [])
        if not isinstance(rows, list):
            raise ConfigError("groupSpec.kernel must be a list of vectors")
        kernel_rows = []
        for row in rows:
            if (not isinstance(row, list) or len(row) != dim
                    or not all(_plain_int(x) for x in row)):
                raise ConfigError(
                    f"kernel vectors must hold {dim} integers each")
            kernel_rows.append(tuple(row))

        seed = payload.get("masterSeed")
        if not _plain_int(seed) or not 0 <= seed < 2 ** 64:
            raise ConfigError("masterSeed is required and must fit in 64 bits")

        model = payload.get("kernelModel")
        if model is not None and not isinstance(model, dict):
            raise ConfigError("kernelModel must be an object")

        n_list = payload.get("nList")
        if n_list is not None:
            if (not isinstance(n_list, list) or not n_list
                    or not all(_plain_int(n) and n >= 1 for n in n_list)
                    or any(b <= a for a, b in zip(n_list, n_list[1:]))):
                raise ConfigError(
                    "nList must be a strictly increasing list of levels >= 1")
            n_list = tuple(n_list)

        replicates = payload.get("replicates")
        if replicates is not None and (not _plain_int(replicates)
                                       or replicates < 0):
            raise ConfigError("replicates must be a nonnegative integer")

        truncation = payload.get("truncationIndex", 2048)
        if not _plain_int(truncation) or truncation < 1:
            raise ConfigError("truncationIndex must be a positive integer")

        raw_suite = payload.get("gSuite", [])
        if not isinstance(raw_suite, list):
            raise ConfigError("gSuite must be a list")
        g_suite = []
        suite_doc = []
        for entry in raw_suite:
            if isinstance(entry, dict):
                if set(entry) != {"a", "wdt", "beta"}:
                    raise ConfigError("gSuite entries need keys a, wdt, beta")
                triple = (entry["a"], entry["wdt"], entry["beta"])
            elif isinstance(entry, list) and len(entry) == 3:
                triple = tuple(entry)
            else:
                raise ConfigError("gSuite entries must be (a, wdt, beta)")
            try:
                g_suite.append(pp.TestFunction(*(float(v) for v in triple)))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad gSuite entry {triple}: {exc}") from exc
            suite_doc.append([float(v) for v in triple])

        out_dir = payload.get("outputDir")
        if out_dir is not None and not isinstance(out_dir, str):
            raise ConfigError("outputDir must be a string")
        diagnostics = payload.get("scalingDiagnostics", False)
        if not isinstance(diagnostics, bool):
            raise ConfigError("scalingDiagnostics must be a boolean")

        resolved = {
            "groupSpec": {"dim": dim, "kernel": [list(r) for r in kernel_rows]},
            "masterSeed": seed,
            "truncationIndex": truncation,
        }
        if model is not None:
            resolved["kernelModel"] = model
        if n_list is not None:
            resolved["nList"] = list(n_list)
        if replicates is not None:
            resolved["replicates"] = replicates
        if suite_doc:
            resolved["gSuite"] = suite_doc
        if out_dir is not None:
            resolved["outputDir"] = out_dir
        if diagnostics:
            resolved["scalingDiagnostics"] = True
        canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
        digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()

        return cls(dim, tuple(kernel_rows), model, n_list, replicates, seed,
                   truncation, tuple(g_suite), out_dir, diagnostics,
                   canonical, digest)


def _load_payload(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def _build_structure(config):
    try:
        return analyze_quotient(GroupSpec(config.group_dim, config.kernel_rows))
    except MathDomainError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad groupSpec: {exc}") from exc


def _build_model(config, structure):
    doc = config.kernel_model
    if doc is None:
        raise ConfigError("this command needs a kernelModel")
    try:
        if "taps" in doc:
            extra = sorted(set(doc) - {"alpha", "taps", "weight", "markId"})
            if extra:
                raise ValueError(f"unknown kernelModel keys: {', '.join(extra)}")
            return moving_average_model(
                structure, float(doc["alpha"]),
                tuple(float(t) for t in doc["taps"]),
                weight=float(doc.get("weight", 1.0)),
                mark_id=doc.get("markId", "w0"))
        return KernelModel.from_dict(doc, structure)
    except MathDomainError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad kernelModel: {exc}") from exc


@lru_cache(maxsize=8)
def _runtime(canonical):
    """Rebuild (config, structure, model, scale) in whichever process asks."""
    config = ExperimentConfig.from_payload(json.loads(canonical))
    structure = _build_structure(config)
    model = _build_model(config, structure)
    scale = None
    if structure.free_rank:
        scale = scaling_constant(structure, rng=substream(config.master_seed,
                                                          987654321))
    return config, structure, model, scale


def _map_cells(fn, canonical, cells, workers):
    bound = partial(fn, canonical)
    if workers <= 1 or len(cells) <= 1:
        return [bound(*cell) for cell in cells]
    chunk = max(1, len(cells) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(bound, [c[0] for c in cells],
                             [c[1] for c in cells], chunksize=chunk))


def _simulate_cell(canonical, ni, r):
    config, structure, model, _scale = _runtime(canonical)
    rng = substream(config.master_seed, ni, r)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        field = sample_field(model, structure, config.n_list[ni],
                             config.truncation_index, rng)
    return partial_maxima(field), bool(field.diagnostics["warned"])


def _converge_cell(canonical, ni, r):
    config, structure, model, scale = _runtime(canonical)
    rng = substream(config.master_seed, ni, r)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        field = sample_field(model, structure, config.n_list[ni],
                             config.truncation_index, rng)
    measure = pp.build_normalized_measure(field, structure, scale, model.alpha)
    return [measure.integrate(g) for g in config.g_suite]


def _out_dir(args, config):
    path = args.out or config.output_dir or "stablefield-out"
    os.makedirs(path, exist_ok=True)
    return path


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path, doc):
    _write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _emit(doc, as_json, lines):
    if as_json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _resolved_config(args):
    payload = _load_payload(args.config)
    if getattr(args, "seed", None) is not None:
        if not isinstance(payload, dict):
            raise ConfigError("the config document must be a JSON object")
        payload = dict(payload)
        payload["masterSeed"] = args.seed
    return ExperimentConfig.from_payload(payload)


def cmd_analyze(args) -> int:
    config = _resolved_config(args)
    structure = _build_structure(config)
    report = geometry_report(structure,
                             rng=substream(config.master_seed, 987654320))
    _system, body = build_body(structure)
    doc = {
        "command": "analyze",
        "configHash": config.config_hash,
        "masterSeed": config.master_seed,
        "groupSpec": {"dim": config.group_dim,
                      "kernel": [list(r) for r in config.kernel_rows]},
        "bodyBounds": [[float(lo), float(hi)] for lo, hi in body.bounds],
        "volumeIdentity": {
            "value": report["l"] * report["integralV"],
            "want": float(2 ** config.group_dim),
        },
        **report,
    }
    out = _out_dir(args, config)
    path = os.path.join(out, "analysis.json")
    _write_json(path, doc)
    _emit(doc, args.json, [
        f"p={doc['p']} q={doc['q']} l={doc['l']} c={doc['c']}",
        f"body volume {doc['volumeC']}, fiber integral {doc['integralV']}",
        f"report written to {path}",
    ])
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _resolved_config(args)
    if config.n_list is None:
        raise ConfigError("simulate needs nList")
    if not config.replicates:
        raise ConfigError("simulate needs replicates >= 1")
    structure = _build_structure(config)
    model = _build_model(config, structure)

    cells = [(ni, r) for ni in range(len(config.n_list))
             for r in range(config.replicates)]
    results = _map_cells(_simulate_cell, config.canonical, cells, args.workers)

    rows = []
    by_level = {n: [] for n in config.n_list}
    warned = 0
    for (ni, r), (mn, flag) in zip(cells, results):
        n = config.n_list[ni]
        rows.append((r, n, mn, f"{config.master_seed}:{ni}:{r}"))
        by_level[n].append(mn)
        warned += int(flag)
    rows.sort(key=lambda row: (row[1], row[0]))

    csv = "replicate,n,Mn,seed\n" + "".join(
        f"{r},{n},{mn!r},{seed}\n" for r, n, mn, seed in rows)
    out = _out_dir(args, config)
    csv_path = os.path.join(out, "maxima.csv")
    _write_text(csv_path, csv)

    medians = {n: float(np.median(vals)) for n, vals in by_level.items()}
    slope = None
    if len(config.n_list) >= 2 and all(v > 0 for v in medians.values()):
        slope = float(np.polyfit(np.log(list(medians)),
                                 np.log(list(medians.values())), 1)[0])
    recip = 1.0 / model.alpha
    doc = {
        "command": "simulate",
        "configHash": config.config_hash,
        "masterSeed": config.master_seed,
        "alpha": model.alpha,
        "nList": list(config.n_list),
        "replicates": config.replicates,
        "truncationIndex": config.truncation_index,
        "medians": {str(n): med for n, med in medians.items()},
        "logMedianSlope": slope,
        "alphaReciprocal": recip,
        "slopeWithinBand": (None if slope is None
                            else bool(abs(slope - recip) <= 0.2)),
        "truncationWarnings": warned,
        "maximaCsv": "maxima.csv",
    }
    _write_json(os.path.join(out, "simulate.json"), doc)
    _emit(doc, args.json, [
        "median partial maxima per level: " + ", ".join(
            f"{n}: {medians[n]:.6g}" for n in config.n_list),
        f"log-median slope {slope} (1/alpha = {recip:.6g})",
        f"{warned} of {len(cells)} fields hit the truncation cap",
        f"rows written to {csv_path}",
    ])
    return EXIT_OK


def cmd_converge(args) -> int:
    config = _resolved_config(args)
    if config.n_list is None:
        raise ConfigError("converge needs nList")
    if config.replicates is None or config.replicates < 100:
        raise ConfigError("converge needs replicates >= 100")
    if not config.g_suite:
        raise ConfigError("converge needs a nonempty gSuite")
    structure = _build_structure(config)
    model = _build_model(config, structure)
    if structure.free_rank == 0:
        raise MathDomainError("limit comparison needs free directions")
    geom = pp.geometry_context(structure,
                               rng=substream(config.master_seed, 987654322))

    theoretical = [
        pp.laplace_theoretical(model, structure, geom, g,
                               rng=substream(config.master_seed, 987654323))
        for g in config.g_suite
    ]

    cells = [(ni, r) for ni in range(len(config.n_list))
             for r in range(config.replicates)]
    results = _map_cells(_converge_cell, config.canonical, cells, args.workers)

    integrals = {ni: [] for ni in range(len(config.n_list))}
    for (ni, _r), vals in zip(cells, results):
        integrals[ni].append(vals)

    rows = []
    gaps = {gi: [] for gi in range(len(config.g_suite))}
    for ni, n in enumerate(config.n_list):
        vals = np.exp(-np.array(integrals[ni]))      # (replicates, suite)
        est = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])
        for gi in range(len(config.g_suite)):
            gap = abs(float(est[gi]) - theoretical[gi])
            gaps[gi].append(gap)
            rows.append({
                "n": n, "gId": gi,
                "empirical": float(est[gi]), "se": float(se[gi]),
                "theoretical": theoretical[gi], "gap": gap,
                "pass": bool(gap <= 3.0 * float(se[gi])),
            })

    pass_at_largest = []
    trend = []
    for gi in range(len(config.g_suite)):
        last = [r for r in rows
                if r["gId"] == gi and r["n"] == config.n_list[-1]]
        pass_at_largest.append(last[0]["pass"])
        if len(config.n_list) >= 3:
            tau = stats.kendalltau(config.n_list, gaps[gi])
            trend.append(bool(tau.statistic < 0 and tau.pvalue < 0.2))
        else:
            trend.append(None)

    csv = "n,gId,empirical,SE,theoretical,pass\n" + "".join(
        f"{r['n']},{r['gId']},{r['empirical']!r},{r['se']!r},"
        f"{r['theoretical']!r},{'true' if r['pass'] else 'false'}\n"
        for r in rows)
    out = _out_dir(args, config)
    csv_path = os.path.join(out, "convergence.csv")
    _write_text(csv_path, csv)

    doc = {
        "command": "converge",
        "configHash": config.config_hash,
        "masterSeed": config.master_seed,
        "alpha": model.alpha,
        "nList": list(config.n_list),
        "replicates": config.replicates,
        "gSuite": [[g.a, g.width, g.beta] for g in config.g_suite],
        "rows": rows,
        "passAtLargest": pass_at_largest,
        "trendDecreasing": trend,
        "convergenceCsv": "convergence.csv",
    }
    if config.scaling_diagnostics:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            diag = pp.scaling_diagnostics(
                model, structure, geom, config.n_list, config.replicates,
                config.master_seed, truncation_index=config.truncation_index)
        doc["scalingDiagnostics"] = {
            "delta": diag["delta"],
            "epsilon": diag["epsilon"],
            "unnormalized": {str(n): diag["unnormalized"][n]
                             for n in config.n_list},
            "growthRatios": diag["growthRatios"],
            "overScaled": {str(n): diag["overScaled"][n]
                           for n in config.n_list},
            "underScaled": {str(n): diag["underScaled"][n]
                            for n in config.n_list},
            "overMonotone": diag["overMonotone"],
            "underMonotone": diag["underMonotone"],
        }
    _write_json(os.path.join(out, "convergence.json"), doc)

    lines = [
        (f"n={r['n']} g{r['gId']}: empirical {r['empirical']:.6f} "
         f"theoretical {r['theoretical']:.6f} "
         f"({'pass' if r['pass'] else 'FAIL'})")
        for r in rows
    ]
    verdict = all(pass_at_largest)
    lines.append(f"largest level agreement: "
                 f"{'pass' if verdict else 'FAIL'}; rows in {csv_path}")
    _emit(doc, args.json, lines)
    return EXIT_OK if verdict else EXIT_ASSERTION


def _golden_assertions(tol):
    structure = analyze_quotient(GroupSpec(2, ((1, 1),)))
    _system, body = build_body(structure)
    fiber = build_fiber_volume(structure)
    report = geometry_report(structure)
    (lo, hi), = body.bounds
    checks = [
        ("effective ranks (p, q, l)",
         (report["p"], report["q"], report["l"]), (1, 1, 1), None),
        ("projected body interval",
         (float(lo), float(hi)), (-2.0, 2.0), tol),
        ("fiber volume at one half", fiber((0.5,)), 1.5, tol),
        ("scaling constant", report["c"], 4.0, tol),
        ("volume identity", report["l"] * report["integralV"], 4.0, tol),
    ]
    results = []
    for name, value, want, tolerance in checks:
        if tolerance is None:
            ok = value == want
            error = None
        else:
            error = max(abs(v - w) for v, w in zip(np.atleast_1d(value),
                                                   np.atleast_1d(want)))
            error = float(error)
            ok = error <= tolerance
        results.append({
            "name": name,
            "value": value if tolerance is None else _as_jsonable(value),
            "want": want if tolerance is None else _as_jsonable(want),
            "error": error,
            "tolerance": tolerance,
            "pass": bool(ok),
        })
    return results


def _as_jsonable(value):
    if isinstance(value, tuple):
        return [float(v) for v in value]
    return float(value)


def cmd_golden(args) -> int:
    raw = os.environ.get(GOLDEN_TOL_ENV)
    if raw is None:
        tol = 1e-9
    else:
        try:
            tol = float(raw)
        except ValueError as exc:
            raise ConfigError(f"{GOLDEN_TOL_ENV} must be a float: {raw}") from exc

    results = _golden_assertions(tol)
    builtin = {"groupSpec": {"dim": 2, "kernel": [[1, 1]]}}
    canonical = json.dumps(builtin, sort_keys=True, separators=(",", ":"))
    doc = {
        "command": "golden",
        "configHash": hashlib.sha256(canonical.encode()).hexdigest(),
        "masterSeed": None,
        "tolerance": tol,
        "assertions": results,
        "pass": all(r["pass"] for r in results),
    }
    lines = [
        f"{'PASS' if r['pass'] else 'FAIL'} {r['name']}: "
        f"{r['value']} (want {r['want']})"
        for r in results
    ]
    _emit(doc, args.json, lines)
    if not doc["pass"]:
        failing = next(r["name"] for r in results if not r["pass"])
        print(f"golden assertion failed: {failing}", file=sys.stderr)
        return EXIT_ASSERTION
    if not args.json:
        print("all golden assertions pass")
    return EXIT_OK


def _add_common(sub, seeded=True):
    sub.add_argument("--config", required=True, help="path to a JSON config")
    sub.add_argument("--out", help="output directory (overrides outputDir)")
    if seeded:
        sub.add_argument("--seed", type=int,
                         help="override the config's masterSeed")
        sub.add_argument("--workers", type=int, default=1,
                         help="parallel worker processes")
    sub.add_argument("--json", action="store_true",
                     help="print the report as JSON")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stablefield",
        description="Group quotient analysis and heavy tailed field "
                    "simulation for lattice moving averages.")
    subs = parser.add_subparsers(dest="command", required=True)

    analyze = subs.add_parser("analyze", help="quotient + geometry report")
    _add_common(analyze, seeded=False)
    analyze.add_argument("--seed", type=int,
                         help="override the config's masterSeed")
    analyze.set_defaults(func=cmd_analyze)

    simulate = subs.add_parser("simulate", help="partial maxima Monte Carlo")
    _add_common(simulate)
    simulate.set_defaults(func=cmd_simulate)

    converge = subs.add_parser("converge",
                               help="Laplace functional convergence report")
    _add_common(converge)
    converge.set_defaults(func=cmd_converge)

    golden = subs.add_parser("golden", help="built-in end-to-end checks")
    golden.add_argument("--json", action="store_true",
                        help="print the report as JSON")
    golden.set_defaults(func=cmd_golden)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MathDomainError as exc:
        print(f"math domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
