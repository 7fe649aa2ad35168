"""Command line entry point: ``dfsqec <subcommand>``.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

log = logging.getLogger("dfsqec")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CODE_ALIASES = {"211": "dfs", "dfs": "dfs", "513": "513", "1014": "1014"}


class UsageError(Exception):
    pass


# -- shared plumbing -----------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, args: argparse.Namespace, config: dict, outputs: list[Path]) -> Path:
    from importlib.metadata import PackageNotFoundError, version
    try:
        pkg_version = version("artifact")
    except PackageNotFoundError:  # pragma: no cover - running from a source tree
        pkg_version = "unknown"
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "config": config,
        "seed": getattr(args, "seed", None),
        "package_version": pkg_version,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _parse_sets(items: list[str]) -> dict[str, dict[str, str]]:
    """``section.key=value`` overrides; a bare key goes to [plan]."""
    out: dict[str, dict[str, str]] = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        section, _, name = key.strip().rpartition(".")
        out.setdefault(section or "plan", {})[name] = value.strip()
    return out


def load_run_config(path: str | None, sets: list[str]) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {"plan": {}, "noise": {}}
    if path:
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise UsageError(f"cannot read config {path}")
        for name in parser.sections():
            if name not in sections:
                raise UsageError(f"unknown config section [{name}]")
            sections[name].update(parser.items(name))
    for section, values in _parse_sets(sets).items():
        if section not in sections:
            raise UsageError(f"unknown config section {section!r} in --set")
        sections[section].update(values)
    return sections


# -- subcommands -------------------------------------------------------------------

def cmd_codes_verify(args) -> int:
    from .codes import ConcatenationMap, build_1014, build_code, build_dfs, build_513, verify_concatenation, verify_code
    name = CODE_ALIASES.get(args.code)
    if name is None:
        raise UsageError(f"unknown code {args.code!r}; choose from {sorted(CODE_ALIASES)}")
    t0 = time.perf_counter()
    code = build_code(name)
    report = verify_code(code)
    print(report.to_text())
    ok = report.ok
    if name == "1014":
        problems = verify_concatenation(ConcatenationMap(build_513(), build_dfs()), build_1014())
        print("concatenation map: " + ("reproduces the generators" if not problems else "; ".join(problems)))
        ok = ok and not problems
    print(f"time: {time.perf_counter() - t0:.3f} s")
    return EXIT_OK if ok else EXIT_FAIL


def _read_records(args) -> list[str]:
    lines = list(args.records)
    if args.batch:
        text = sys.stdin.read() if args.batch == "-" else Path(args.batch).read_text()
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#") and not line.startswith("record"):
                lines.append(line.split(",")[0].strip('"'))
    if not lines:
        raise UsageError("give at least one record or --batch FILE")
    return lines


def cmd_decode(args) -> int:
    from .protocol.decoder import Decoder, ProtocolError, SyndromeRecord
    table = {}
    if not args.no_flags:
        from .protocol.hooks import build_hook_table
        table = build_hook_table().table
    decoder = Decoder(hook_table=table)
    rng = np.random.default_rng(args.seed)
    try:
        records = [SyndromeRecord.parse(text) for text in _read_records(args)]
    except ProtocolError as exc:
        raise UsageError(str(exc)) from exc
    if args.batch:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["record", "correction", "ambiguous", "rejected"])
        for rec in records:
            out = decoder.decode(rec, args.mode, rng)
            w.writerow([str(rec), str(out.correction), int(out.ambiguous), int(out.rejected)])
    else:
        for rec in records:
            print(decoder.decode(rec, args.mode, rng).to_text())
    return EXIT_OK


def cmd_fault_scan(args) -> int:
    from .protocol.faultscan import fault_scan, sample_fault_pairs
    t0 = time.perf_counter()
    report = fault_scan(deflag=args.deflag)
    print(report.report())
    if args.pairs:
        bad, n = sample_fault_pairs(samples=args.pairs, seed=args.seed)
        print(f"two-fault sample: {bad}/{n} pairs leave weight > 1 ({bad / n:.3f}, informational)")
    print(f"wall time: {time.perf_counter() - t0:.2f} s")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_run(args) -> int:
    from .experiments import plan_from_mapping, run_memory
    from .noise import noise_from_mapping
    sections = load_run_config(args.config, args.set)
    try:
        noise = noise_from_mapping(sections["noise"])
        plan_values = dict(sections["plan"])
        if args.seed is not None:
            plan_values["seed"] = str(args.seed)
        plan = plan_from_mapping(plan_values, noise)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result = run_memory(plan, workers=args.workers)
    csv_path = out / "results.csv"
    json_path = out / "summary.json"
    csv_path.write_text(result.to_csv())
    json_path.write_text(result.to_json() + "\n")
    resolved = {"plan": {k: v for k, v in result.summary()["plan"].items() if k != "noise"},
                "noise": noise.as_dict()}
    write_manifest(out, args, resolved, [csv_path, json_path])
    print(f"{len(result.points)} points in {time.perf_counter() - t0:.1f} s -> {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    from .analysis_fit import fit_summary, lifetime_report, table_csv
    models = {}
    fp_models = {}
    for path in args.results:
        per_state, per_label = fit_summary(json.loads(Path(path).read_text()))
        models.update(per_state)
        fp_models.update(per_label)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = out / "table.csv"
    table.write_text(table_csv({**models, **{f"{k}:F_p": v for k, v in fp_models.items()}}))
    lives = out / "lifetimes.json"
    ref = args.reference if args.reference in fp_models else None
    lives.write_text(json.dumps(lifetime_report(fp_models, ref), indent=2, sort_keys=True) + "\n")
    write_manifest(out, args, {"results": [str(p) for p in args.results], "reference": ref}, [table, lives])
    print(table.read_text(), end="")
    print(lives.read_text(), end="")
    return EXIT_OK


def cmd_bench_decoder(args) -> int:
    from .protocol.decoder import Decoder, SyndromeRecord
    from .protocol.hooks import build_hook_table
    decoder = Decoder(hook_table=build_hook_table().table)
    rng = np.random.default_rng(args.seed)
    tie = np.random.default_rng(args.seed + 1)
    r = rng.integers(0, 32, size=args.n)
    s = rng.integers(0, 16, size=args.n)
    records = [SyndromeRecord(int(a), int(b)) for a, b in zip(r, s)]
    times = np.empty(args.n)
    clock = time.perf_counter_ns
    for i, rec in enumerate(records):
        t0 = clock()
        decoder.decode(rec, "correct", tie)
        times[i] = clock() - t0
    us = times / 1e3
    q = np.percentile(us, [50, 90, 99])
    print(f"decode calls: {args.n}")
    print(f"median {q[0]:.2f} us, p90 {q[1]:.2f} us, p99 {q[2]:.2f} us, max {us.max():.2f} us")
    edges = np.array([0, 5, 10, 20, 50, 100, 200, np.inf])
    hist, _ = np.histogram(us, edges)
    for lo, hi, c in zip(edges[:-1], edges[1:], hist):
        print(f"  [{lo:>5g}, {hi:>5g}) us: {c}")
    return EXIT_OK if q[0] < args.budget else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dfsqec", description="DFS-concatenated memory simulation toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    codes = sub.add_parser("codes", help="code utilities")
    codes_sub = codes.add_subparsers(dest="action", required=True)
    verify = codes_sub.add_parser("verify", help="brute-force distance and structure checks")
    verify.add_argument("code", help="211 (or dfs), 513 or 1014")
    verify.set_defaults(func=cmd_codes_verify)

    dec = sub.add_parser("decode", help="decode syndrome records")
    dec.add_argument("records", nargs="*", help='records like "r=10000 s=1001 flags=000"')
    dec.add_argument("--batch", metavar="FILE", help="one record per line ('-' for stdin); CSV out")
    dec.add_argument("--mode", choices=("correct", "post-select"), default="correct")
    dec.add_argument("--seed", type=int, default=0, help="tie-break stream seed")
    dec.add_argument("--no-flags", action="store_true", help="skip the flag lookup table")
    dec.set_defaults(func=cmd_decode)

    fs = sub.add_parser("fault-scan", help="exhaustive single-fault scan of the QEC cycle")
    fs.add_argument("--deflag", action="store_true", help="drop all flags (negative control, expect failures)")
    fs.add_argument("--pairs", type=int, default=0, help="also sample this many fault pairs")
    fs.add_argument("--seed", type=int, default=0)
    fs.set_defaults(func=cmd_fault_scan)

    run = sub.add_parser("run", help="memory experiment")
    run.add_argument("--config", help="INI file with [plan] and [noise] sections")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override, e.g. noise.p2=0.003 or plan.shots=500")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default="out")
    run.add_argument("--workers", type=int, default=None, help="processes (default: all cores)")
    run.set_defaults(func=cmd_run)

    fit = sub.add_parser("fit", help="fit decay models to run outputs")
    fit.add_argument("results", nargs="+", help="summary.json files written by run")
    fit.add_argument("--out", default="fit")
    fit.add_argument("--reference", default="physical", help="label for improvement factors")
    fit.set_defaults(func=cmd_fit)

    bench = sub.add_parser("bench-decoder", help="decoder latency on random records")
    bench.add_argument("--n", type=int, default=1_000_000)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--budget", type=float, default=100.0, help="median latency budget in us")
    bench.set_defaults(func=cmd_bench_decoder)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
