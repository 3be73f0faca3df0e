"""Command line entry point: ``tame-levy --config T1.yaml --command verify``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .errors import AlphaTooSmall, CapExceeded, ConfigError, NumericalFailure, TameLevyError
from .tower import TowerSpec, bundled_config, load_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _version():
    try:
        return metadata.version("tame-levy")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass
class RunManifest:
    tower: dict
    command: str
    seed: int
    level: int | None
    samples: int | None
    horizon: float | None
    caps: dict
    tolerances: dict
    version: str
    started: str
    finished: str = ""
    outputs: list = field(default_factory=list)
    tower_digest: str = ""


def resolve_config(arg: str) -> TowerSpec:
    path = Path(arg)
    if path.exists():
        return load_config(path)
    if arg in {"T1", "T2", "T3"}:
        return bundled_config(arg)
    raise ConfigError(f"config {arg!r} not found")


def _write_table(out: Path | None, name: str, rows: list[dict], fmt: str, outputs: list):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out / f"{name}.json"
        path.write_text(json.dumps(rows, indent=1, sort_keys=True) + "\n")
    else:
        path = out / f"{name}.csv"
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        path.write_text(buf.getvalue())
    outputs.append(str(path))


def cmd_verify(spec, args, outputs):
    from .verify import VerifyOptions, all_passed, format_table, run_verify

    opts = VerifyOptions(max_level=args.level or 3, mc_samples=args.samples or 0, seed=args.seed)
    results = run_verify(spec, opts)
    print(format_table(results))
    _write_table(args.out, "verify", [r.row() for r in results], args.format, outputs)
    failed = [r for r in results if not r.passed]
    if failed:
        names = sorted({r.name for r in failed})
        print(f"FAILED: {', '.join(names)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK if all_passed(results) else EXIT_FAIL


def _simulate(spec, args):
    from .simulator import simulate_ensemble

    return simulate_ensemble(spec, args.level, args.samples, args.seed, horizon=args.horizon)


def cmd_simulate(spec, args, outputs):
    from .errors import Censored
    from .simulator import first_exit_time
    from .support import level_group

    paths = _simulate(spec, args)
    grp = level_group(spec, args.level)
    rows = []
    for p in paths:
        final = p.states[-1] if len(p.states) else np.zeros(grp.m, dtype=np.int64)
        rows.append({
            "stream": p.stream,
            "jumps": p.num_jumps,
            "final_digits": " ".join(str(v) for v in grp.coords_to_digits(final).tolist()),
        })
    _write_table(args.out, "paths_summary", rows, args.format, outputs)
    stats_rows = []
    for N in range(1, args.level + 1):
        pis = []
        censored = 0
        for p in paths:
            try:
                pis.append(first_exit_time(spec, p, N))
            except Censored:
                censored += 1
        stats_rows.append({
            "N": N,
            "exited": len(pis),
            "censored": censored,
            "mean_pi": repr(float(np.mean(pis))) if pis else "",
            "var_pi": repr(float(np.var(pis, ddof=1))) if len(pis) > 1 else "",
        })
    _write_table(args.out, "exit_stats", stats_rows, args.format, outputs)
    if args.out is not None:
        path = args.out / "paths.txt"
        path.write_text("".join(p.to_lines(spec) for p in paths))
        outputs.append(str(path))
    for r in stats_rows:
        print(f"N={r['N']}: exited {r['exited']}, censored {r['censored']}, mean pi {r['mean_pi']}")
    return EXIT_OK


def cmd_analyze(spec, args, outputs):
    from .analysis import dimension_report

    paths = _simulate(spec, args)
    report = dimension_report(spec, paths, range(1, args.level + 1))
    rows = [{k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()} for row in report.rows()]
    # fixed schema whether or not phi applies at a level
    for row in rows:
        for key in ("phi_median", "phi_q1", "phi_q3"):
            row.setdefault(key, "")
    _write_table(args.out, "dimension", rows, args.format, outputs)
    for row in rows:
        print(f"n={row['n']}: median N_n {row['N_median']}, median box estimate {row['box_median']}")
    return EXIT_OK


def cmd_report(spec, args, outputs):
    from .levy import asymptotic_ratio, bn_sequence, exact_q, levy_table, total_mass
    from .simulator import Q_mc

    level = args.level or 3
    shell_rows = []
    for n in range(1, level + 1):
        if not spec.has_level(n):
            break
        t = levy_table(spec, n)
        for j0, (c, m) in enumerate(zip(t.counts, t.masses)):
            shell_rows.append({"n": n, "j0": j0, "count": c, "mass": repr(m)})
    _write_table(args.out, "shells", shell_rows, args.format, outputs)

    n_max = max(8, level)
    try:
        seq = bn_sequence(spec, n_max)
    except AlphaTooSmall as exc:
        seq = exc.partial
    seq_rows = []
    for n in range(1, n_max + 1):
        seq_rows.append({
            "n": n,
            "Lambda_n": repr(total_mass(spec, n)),
            "ratio": repr(asymptotic_ratio(spec, n)),
            "b_n": repr(seq.b[n - 1]),
            "B_n": repr(seq.B[n - 1]) if seq.B else "",
        })
    _write_table(args.out, "sequences", seq_rows, args.format, outputs)

    q_rows = []
    for n in range(2, level + 1):
        if not (spec.has_level(n) and spec.enumerable(n)):
            continue
        for N in range(1, n):
            q = exact_q(spec, n, N)
            row = {"n": n, "N": N, "Q_exact": repr(q.Q), "E_tau": repr(q.expected_tau),
                   "Q_mc": "", "Q_lo": "", "Q_hi": ""}
            if args.samples:
                est, lo, hi = Q_mc(spec, n, N, args.samples, args.seed)
                row.update(Q_mc=repr(est), Q_lo=repr(float(lo)), Q_hi=repr(float(hi)))
            q_rows.append(row)
    _write_table(args.out, "q_table", q_rows, args.format, outputs)
    print(f"wrote {len(shell_rows)} shell rows, {len(seq_rows)} sequence rows, {len(q_rows)} Q rows")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "simulate": cmd_simulate, "analyze": cmd_analyze, "report": cmd_report}


def build_parser():
    ap = argparse.ArgumentParser(prog="tame-levy", description=__doc__)
    ap.add_argument("--config", required=True, help="tower YAML file, or T1/T2/T3 for a bundled tower")
    ap.add_argument("--command", required=True, choices=sorted(COMMANDS))
    ap.add_argument("--level", type=int, default=None)
    ap.add_argument("--alpha", default=None, help="override the stability exponent")
    ap.add_argument("--samples", type=int, default=None)
    ap.add_argument("--horizon", type=float, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", type=Path, default=None)
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    return ap


def _validate(spec, args):
    if args.seed is None:
        args.seed = spec.seed
    if args.command in ("simulate", "analyze"):
        args.level = args.level or 2
        args.samples = 100 if args.samples is None else args.samples
        args.horizon = 1.0 if args.horizon is None else args.horizon
        if args.samples < 1:
            raise ConfigError("--samples must be at least 1")
        if args.horizon <= 0:
            raise ConfigError("--horizon must be positive")
    elif args.samples is not None and args.samples < 0:
        raise ConfigError("--samples cannot be negative")
    if args.level is not None and (args.level < 1 or not spec.has_level(args.level)):
        raise ConfigError(f"tower has no level {args.level}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        spec = resolve_config(args.config)
        if args.alpha is not None:
            spec = spec.with_alpha(args.alpha)
        _validate(spec, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outputs: list = []
    try:
        status = COMMANDS[args.command](spec, args, outputs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure in {exc.check}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except TameLevyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.out is not None:
        manifest = RunManifest(
            tower=spec.to_config(),
            command=args.command,
            seed=args.seed,
            level=args.level,
            samples=args.samples,
            horizon=args.horizon,
            caps={"enum_order": spec.enum_cap},
            tolerances={"coset_sum_rtol": 1e-10, "levy_khinchin": 1e-8, "orthogonality": 1e-10,
                        "lemma2_slack": 1e-9, "q_floor": 0.01, "q_ci": 0.99},
            version=_version(),
            started=started,
            finished=_dt.datetime.now(_dt.timezone.utc).isoformat(),
            outputs=outputs,
            tower_digest=spec.digest(),
        )
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "manifest.json").write_text(json.dumps(asdict(manifest), indent=1) + "\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
