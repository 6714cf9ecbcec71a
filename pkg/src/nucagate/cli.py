"""Command-line driver: ``nucagate {profile,run,compare,gen-trace}``.

Every command writes its files under ``--out`` (default: the current
directory) and exits 0 on success, 1 with a one-line diagnostic on stderr
otherwise.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import SimConfig, load_config, load_workload
from .errors import NucaError
from .fvcodec import fv_accesses_per_kilo, profile_frequent_values
from .simulator import Simulator, compare, compare_csv, load_records, resolve_fv_table
from .trace import AccessRecord, generate_synthetic, read_trace, save_trace

log = logging.getLogger("nucagate")

FV_TABLE_FILE = "fv_table.txt"
INTERVALS_FILE = "intervals.csv"
REPORT_FILE = "report.json"
DECISIONS_FILE = "decisions.log"
SNAPSHOT_FILE = "snapshot.txt"
COMPARE_FILE = "compare.csv"
TRACE_FILE = "trace.txt"


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _with_trace(cfg: SimConfig, trace: str | None) -> SimConfig:
    if trace is None:
        return cfg
    return replace(cfg, trace_path=Path(trace), workload=None)


def _records(cfg: SimConfig, seed: int | None) -> list[AccessRecord]:
    cfg.validate()
    return load_records(cfg, seed)


def cmd_profile(args) -> int:
    if args.trace is not None:
        records = read_trace(args.trace)
    elif args.config is not None:
        records = _records(load_config(args.config), args.seed)
    else:
        raise NucaError("profile needs --trace or --config")
    if not records:
        log.warning("trace is empty; writing an empty FV table")
    table = profile_frequent_values(records, args.k)
    out = _out_dir(args.out)
    table.save(out / FV_TABLE_FILE)
    print(f"records: {len(records)}")
    print(f"fv_entries: {len(table)}")
    print(f"fvapki: {fv_accesses_per_kilo(records, table):.3f}")
    print(f"wrote {out / FV_TABLE_FILE}")
    return 0


def cmd_run(args) -> int:
    cfg = _with_trace(load_config(args.config), args.trace)
    records = _records(cfg, args.seed)
    fv_table = resolve_fv_table(cfg, records)
    sim = Simulator(cfg, fv_table)
    result = sim.run(records)
    out = _out_dir(args.out)
    _write(out / INTERVALS_FILE, result.intervals_csv())
    _write(out / REPORT_FILE, result.report_text())
    _write(out / DECISIONS_FILE, result.decision_log())
    if args.snapshot:
        _write(out / SNAPSHOT_FILE, sim.cache.format_snapshot())
    rep = result.report
    print(f"{result.name}: mode={result.mode.value} policy={result.policy.value}")
    print(f"accesses={result.accesses} miss_rate={result.miss_rate:.6f} extra_misses={result.extra_misses}")
    print(f"active_ratio_mean={result.active_ratio_mean:.4f} intervals={len(result.rows)}")
    print(f"total_energy={rep.total:.6g} edp={rep.edp:.6g}")
    return 0


def cmd_compare(args) -> int:
    configs = [_with_trace(load_config(p), args.trace) for p in args.config]
    records = _records(configs[0], args.seed)
    for c in configs[1:]:
        c.validate(require_source=False)
    rows = compare(configs, records)
    text = compare_csv(rows)
    out = _out_dir(args.out)
    _write(out / COMPARE_FILE, text)
    sys.stdout.write(text)
    return 0


def cmd_gen_trace(args) -> int:
    spec = load_workload(args.config)
    if args.seed is not None:
        spec = replace(spec, rng_seed=args.seed)
    records = generate_synthetic(spec)
    out = _out_dir(args.out)
    save_trace(records, out / TRACE_FILE)
    print(f"wrote {len(records)} records to {out / TRACE_FILE}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nucagate", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_help, required=True, multi=False):
        action = "append" if multi else "store"
        sp.add_argument("--config", action=action, required=required, help=config_help)
        sp.add_argument("--out", default=".", help="output directory (created if missing)")
        sp.add_argument("--seed", type=_u64, default=None, help="override the workload rng_seed")

    sp = sub.add_parser("profile", help="build an FV table from a trace")
    common(sp, "config whose trace/workload is profiled when --trace is absent", required=False)
    sp.add_argument("--trace", help="trace file to profile")
    sp.add_argument("--k", type=int, default=32, help="table size (at most 32)")
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("run", help="simulate one configuration")
    common(sp, "simulator config (YAML)")
    sp.add_argument("--trace", help="trace file, overriding the config's source")
    sp.add_argument("--snapshot", action="store_true", help=f"also write {SNAPSHOT_FILE}")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare", help="simulate several configurations on one trace")
    common(sp, "config (repeat; the first one is the normalisation baseline and trace source)", multi=True)
    sp.add_argument("--trace", help="trace file shared by all configs")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("gen-trace", help="write a synthetic trace")
    common(sp, "workload file (a WorkloadSpec mapping or a config with `workload:`)")
    sp.set_defaults(func=cmd_gen_trace)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(format="%(name)s: %(levelname)s: %(message)s", level=logging.WARNING)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NucaError, OSError) as exc:
        print(f"nucagate {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
