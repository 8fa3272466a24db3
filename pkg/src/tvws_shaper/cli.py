"""Command line entry point ``tvws-shaper``.

    tvws-shaper run fig4 --out results/ --assert
    tvws-shaper run fig5 --seed 7 --jobs 4 --set max_symbols=500000
    tvws-shaper burst --method pro --symbols 100 --out pro.iq
    tvws-shaper psd pro.iq --out pro_psd.csv
    tvws-shaper window --window asym --beta-samples 128 --dump

Exit codes: 0 success, 1 a check failed under ``--assert``, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import experiments
from .analysis import SemMask, estimate_psd, psd_to_csv
from .iqfile import read_iq, write_iq
from .params import ConfigurationError, Method, parse_key_values, profile_by_name, profile_to_text
from .shaping import random_payload, run_pipeline
from .windowing import ShapedBurst, make_window

log = logging.getLogger("tvws_shaper")


def atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data.encode() if isinstance(data, str) else data)
    os.replace(tmp, path)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _parse_sets(pairs: list[str]) -> dict:
    try:
        return parse_key_values("\n".join(pairs))
    except ConfigurationError as exc:
        raise SystemExit(f"--set: {exc}") from None


def _plot_psd(path: Path, curves: dict, title: str, mask: SemMask | None = None) -> None:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "tvws-shaper"  # stable element ids
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    for name, psd in curves.items():
        ax.plot(psd.freq_hz / 1e6, psd.power_db, lw=0.8, label=name)
    if mask is not None:
        f = np.linspace(-max(c.freq_hz.max() for c in curves.values()), max(c.freq_hz.max() for c in curves.values()), 2001)
        ax.plot(f / 1e6, mask.limit(f), "k--", lw=1, label="SEM")
    ax.set_xlabel("frequency (MHz)")
    ax.set_ylabel("PSD (dBr)")
    ax.set_ylim(-120, 10)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_ser(path: Path, tables: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "tvws-shaper"  # stable element ids
    import matplotlib.pyplot as plt

    from .link import qpsk_ser

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, rows in tables.items():
        pts = [(r.snr_db, r.ser) for r in rows if r.ser > 0]
        if pts:
            ax.semilogy(*zip(*pts), marker="o", ms=3, label=name)
    snr = np.linspace(min(r.snr_db for rows in tables.values() for r in rows), max(r.snr_db for rows in tables.values() for r in rows), 200)
    ax.semilogy(snr, qpsk_ser(snr), "k:", lw=1, label="QPSK theory")
    ax.set_xlabel("Es/N0 (dB)")
    ax.set_ylabel("SER")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _ser_csv(rows, header: str) -> str:
    lines = [f"# {header}", "snr_db,ser,errors,symbols,censored"]
    lines += [f"{r.snr_db:.2f},{r.ser:.6e},{r.n_symbol_errors},{r.n_symbols_sent},{int(r.censored)}" for r in rows]
    return "\n".join(lines) + "\n"


def _summary(res: experiments.ExperimentResult, config: dict, digest: str) -> dict:
    out = {
        "preset": res.preset,
        "config": config,
        "config_hash": digest,
        "passed": res.passed,
        "checks": [{"name": c.name, "passed": bool(c.passed), "value": float(c.value), "threshold": c.threshold} for c in res.checks],
    }
    extra = {}
    for key, value in res.extra.items():
        if key == "sem":
            extra[key] = {
                n: {"passed": r.passed, "worst_margin_db": r.worst_margin_db, "worst_freq_hz": r.worst_freq_hz, "segments": r.segment_margins}
                for n, r in value.items()
            }
        elif key == "mask":
            extra[key] = value.breakpoints
        else:
            extra[key] = value
    out["details"] = json.loads(json.dumps(extra, default=float))
    return out


def cmd_run(args: argparse.Namespace) -> int:
    overrides = _parse_sets(args.set or [])
    try:
        base = profile_by_name(args.profile)
        settings, profile_over = experiments.settings_with(overrides)
    except (ConfigurationError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    bcu = base.bcu.value
    config = {"preset": args.preset, "profile": args.profile, "bcu": bcu, "seed": args.seed, "settings": settings, "profile_overrides": profile_over}
    digest = config_hash(config)
    header = f"tvws-shaper {args.preset} config_hash={digest} seed={args.seed}"
    out = Path(args.out)
    fn = experiments.PRESETS[args.preset]
    try:
        if args.preset == "fig5":
            res = fn(bcu, args.seed, overrides, n_jobs=args.jobs)
        elif args.preset == "fig4" and args.mask:
            res = fn(bcu, args.seed, overrides, mask=SemMask.read(args.mask))
        else:
            res = fn(bcu, args.seed, overrides)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if res.curves:
        for name, psd in res.curves.items():
            atomic_write(out / f"{args.preset}_{name}.csv", psd_to_csv(psd, header))
        mask = res.extra.get("mask")
        if mask is not None:
            atomic_write(out / f"{args.preset}_mask.txt", f"# {header}\n" + mask.to_text())
        _plot_psd(out / f"{args.preset}.svg", res.curves, args.preset, mask)
    if res.tables:
        for name, rows in res.tables.items():
            atomic_write(out / f"{args.preset}_ser_{name}.csv", _ser_csv(rows, header))
        _plot_ser(out / f"{args.preset}.svg", res.tables)
    summary = _summary(res, config, digest)
    atomic_write(out / f"{args.preset}_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for c in res.checks:
        print(c.line())
    if args.assert_checks and not res.passed:
        return 1
    return 0


def cmd_burst(args: argparse.Namespace) -> int:
    try:
        p = profile_by_name(f"{args.method}-{args.bcu}", **_parse_sets(args.set or []))
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = random_payload(np.random.default_rng(args.seed), args.symbols)
    burst = run_pipeline(payload, p.method, p)
    write_iq(args.out, burst)
    print(f"wrote {len(burst)} samples at {burst.rate_hz:.6g} Hz to {args.out} ({','.join(burst.provenance)})")
    return 0


def cmd_psd(args: argparse.Namespace) -> int:
    samples, meta = read_iq(args.iq_file)
    p = profile_by_name(meta.get("profile", args.profile))
    burst = ShapedBurst(samples, float(meta["rate_hz"]), int(meta.get("n_symbols", 0)), meta.get("provenance", "").split(","), p)
    psd = estimate_psd(burst, args.segment_len, args.overlap)
    text = psd_to_csv(psd, f"psd of {args.iq_file}")
    if args.out:
        atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_window(args: argparse.Namespace) -> int:
    try:
        w = make_window(args.window, args.beta_samples, args.symbol_len, args.tail_samples)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.dump:
        text = "index,coeff\n" + "".join(f"{i},{c:.12f}\n" for i, c in enumerate(w.coeffs))
        if args.out:
            atomic_write(Path(args.out), text)
        else:
            sys.stdout.write(text)
    else:
        print(f"{w.family.value}: beta={w.beta_nt} symbol_len={w.symbol_len} total_len={w.total_len}")
    return 0


def cmd_profile(args: argparse.Namespace) -> int:
    try:
        p = profile_by_name(args.name, **_parse_sets(args.set or []))
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(profile_to_text(p))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvws-shaper", description="802.11af TVHT pulse-shaping experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a figure preset")
    run.add_argument("preset", choices=sorted(experiments.PRESETS))
    run.add_argument("--profile", default="pro-8mhz", help="shipped profile; its channel unit is used")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="setting or profile override")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--assert", dest="assert_checks", action="store_true", help="exit 1 if any check fails")
    run.add_argument("--out", default="results")
    run.add_argument("--jobs", type=int, default=1, help="parallel workers for SER trials")
    run.add_argument("--mask", help="mask file with lines 'offset_hz limit_dbr' (fig4)")
    run.set_defaults(func=cmd_run)

    burst = sub.add_parser("burst", help="generate a shaped burst and export it as I/Q")
    burst.add_argument("--method", choices=[m.value for m in Method], default="pro")
    burst.add_argument("--bcu", default="8mhz")
    burst.add_argument("--symbols", type=int, default=100)
    burst.add_argument("--seed", type=int, default=0)
    burst.add_argument("--set", action="append", metavar="KEY=VALUE")
    burst.add_argument("--out", required=True)
    burst.set_defaults(func=cmd_burst)

    psd = sub.add_parser("psd", help="PSD of an exported burst, as CSV")
    psd.add_argument("iq_file")
    psd.add_argument("--profile", default="pro-8mhz", help="used when the file names none")
    psd.add_argument("--segment-len", type=int, default=4096)
    psd.add_argument("--overlap", type=float, default=0.5)
    psd.add_argument("--out")
    psd.set_defaults(func=cmd_psd)

    win = sub.add_parser("window", help="generate a pulse-shaping window")
    win.add_argument("--window", choices=["rect", "rc", "vs", "asym"], default="asym")
    win.add_argument("--beta-samples", type=int, default=128)
    win.add_argument("--tail-samples", type=int, default=None, help="falling-edge length (asym only)")
    win.add_argument("--symbol-len", type=int, default=1152, help="CP + body length at the window's rate")
    win.add_argument("--dump", action="store_true", help="write coefficients as CSV")
    win.add_argument("--out")
    win.set_defaults(func=cmd_window)

    prof = sub.add_parser("profile", help="print a shipped profile as key = value lines")
    prof.add_argument("name", nargs="?", default="pro-8mhz")
    prof.add_argument("--set", action="append", metavar="KEY=VALUE")
    prof.set_defaults(func=cmd_profile)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
