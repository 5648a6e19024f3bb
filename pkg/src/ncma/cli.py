"""Command-line experiment harness.

Subcommands:
    run      one session, stats as JSON, optional trace file
    sweep    grid over SNR, L and decoder variant, CSV plus JSON sidecar
    replay   MAC variants (NCMA, MUD-only, SU projection) over a recorded trace
    stats    event-group frequencies and throughput bound of a trace

Config files are flat ``key = value`` text. Sweep axes take a bracketed list,
e.g. ``snr_a = [0, 2, 4]``. Lines starting with ``#`` are comments. The
default config path comes from ``$NCMA_CONFIG`` when ``--config`` is absent.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .channel import MODELS
from .phydec import GROUPS, event_group
from .protocol import (VARIANTS, ConfigError, SessionConfig, Trace, TraceError, replay,
                       run_session, upper_bound)

log = logging.getLogger("ncma")

CONFIG_ENV = "NCMA_CONFIG"
AXES = ("snr_a", "snr_b", "L_A", "L_B", "variant")
SCALARS = {
    "repetitions": int, "seed": int, "slots": int, "K": int, "slots_per_poll": int,
    "channel": str, "alpha": float, "sigma2": float, "groups": int, "csi_error": float,
    "output": str,
}
AXIS_TYPES = {"snr_a": float, "snr_b": float, "L_A": int, "L_B": int, "variant": str}

ROW_FIELDS = (["kind", "variant", "snr_a", "snr_b", "L_A", "L_B", "rep", "seed", "slots"]
              + [f"Pr_{g}" for g in GROUPS]
              + ["th_A", "th_B", "th_total", "upper_bound", "config_hash", "status"])
NUMERIC = ["Pr_" + g for g in GROUPS] + ["th_A", "th_B", "th_total", "upper_bound"]


@dataclass
class ExperimentSpec:
    snr_a: list = field(default_factory=lambda: [10.0])
    snr_b: list = field(default_factory=lambda: [10.0])
    L_A: list = field(default_factory=lambda: [16])
    L_B: list = field(default_factory=lambda: [16])
    variant: list = field(default_factory=lambda: ["NCMA-RMUD"])
    repetitions: int = 1
    seed: int = 0
    slots: int = 1000
    K: int = 64
    slots_per_poll: int = 3
    channel: str = "fixed-phase"
    alpha: float = 0.228
    sigma2: float = 0.5
    groups: int = 8
    csi_error: float = 0.0
    output: str = "results"

    def validate(self) -> None:
        for axis in AXES:
            if not getattr(self, axis):
                raise ConfigError(f"sweep axis {axis!r} is empty")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        bad = [v for v in self.variant if v not in VARIANTS]
        if bad:
            raise ConfigError(f"unknown variants {bad}; expected some of {sorted(VARIANTS)}")
        if self.channel not in MODELS:
            raise ConfigError(f"unknown channel model {self.channel!r}")

    def points(self):
        """Yield ``(variant, snr_a, snr_b, L_A, L_B)`` over the full grid."""
        return itertools.product(self.variant, self.snr_a, self.snr_b, self.L_A, self.L_B)

    def session(self, variant, snr_a, snr_b, L_A, L_B, rep) -> SessionConfig:
        return SessionConfig(
            nodes={"A": float(snr_a), "B": float(snr_b)}, pairs=[("A", "B")],
            L={"A": int(L_A), "B": int(L_B)}, K=self.K, slots=self.slots,
            slots_per_poll=self.slots_per_poll, variant=variant, channel=self.channel,
            groups=self.groups, alpha=self.alpha, sigma2=self.sigma2,
            csi_error=self.csi_error, seed=self.seed + rep)

    def spec_hash(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


def _parse_value(text: str, typ):
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"unterminated list {text!r}")
        items = [t.strip() for t in text[1:-1].split(",") if t.strip()]
        return [typ(t) for t in items]
    return typ(text)


def parse_config(text: str, spec: ExperimentSpec | None = None) -> ExperimentSpec:
    """Apply ``key = value`` lines to ``spec`` (a default spec if None)."""
    spec = spec or ExperimentSpec()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in AXIS_TYPES:
                v = _parse_value(value, AXIS_TYPES[key])
                setattr(spec, key, v if isinstance(v, list) else [v])
            elif key in SCALARS:
                setattr(spec, key, _parse_value(value, SCALARS[key]))
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {e}") from None
    return spec


def load_spec(path: str | None) -> ExperimentSpec:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return ExperimentSpec()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    return parse_config(p.read_text())


def _stats_row(stats, cfg: SessionConfig) -> dict:
    row = {f"Pr_{g}": stats.groups.get(g, "") for g in GROUPS}
    row.update(th_A=stats.throughput.get("A", 0.0), th_B=stats.throughput.get("B", 0.0),
               th_total=stats.total_throughput,
               upper_bound="" if stats.upper_bound is None else stats.upper_bound,
               config_hash=cfg.config_hash())
    return row


def _run_point(args):
    spec, point, rep = args
    variant, snr_a, snr_b, L_A, L_B = point
    row = {"kind": "point", "variant": variant, "snr_a": snr_a, "snr_b": snr_b,
           "L_A": L_A, "L_B": L_B, "rep": rep, "seed": spec.seed + rep, "slots": spec.slots}
    try:
        cfg = spec.session(*point, rep)
        stats, _ = run_session(cfg)
        row.update(_stats_row(stats, cfg), status="ok")
    except Exception as e:  # one bad point must not sink the sweep
        row.update(status=f"error: {e}")
    return row


def _aggregate(rows: list[dict]) -> list[dict]:
    """Mean and standard-error rows per config point over successful repetitions."""
    out = []
    key = lambda r: (r["variant"], r["snr_a"], r["snr_b"], r["L_A"], r["L_B"])
    groups: dict = {}
    for r in rows:
        if r["status"] == "ok":
            groups.setdefault(key(r), []).append(r)
    for k, rs in groups.items():
        mean = {"kind": "mean", "rep": len(rs)}
        err = {"kind": "stderr", "rep": len(rs)}
        for base in (mean, err):
            base.update(zip(("variant", "snr_a", "snr_b", "L_A", "L_B"), k))
            base.update(seed="", slots=rs[0]["slots"], config_hash="", status="ok")
        for col in NUMERIC:
            vals = [float(r[col]) for r in rs if r[col] != ""]
            if not vals:
                mean[col] = err[col] = ""
                continue
            m = sum(vals) / len(vals)
            mean[col] = m
            if len(vals) > 1:
                var = sum((v - m) ** 2 for v in vals) / (len(vals) - 1)
                err[col] = math.sqrt(var / len(vals))
            else:
                err[col] = 0.0
        out += [mean, err]
    return out


def _write_csv(path: Path, rows: list[dict], fields=ROW_FIELDS) -> None:
    with path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(fields), extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def cmd_sweep(spec: ExperimentSpec, workers: int = 1) -> tuple[list[dict], int]:
    """Run every grid point and repetition; returns rows and the exit code."""
    spec.validate()
    jobs = [(spec, pt, rep) for pt in spec.points() for rep in range(spec.repetitions)]
    log.info("sweep: %d sessions on %d worker(s)", len(jobs), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_point, jobs))
    else:
        rows = [_run_point(j) for j in jobs]
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        log.error("point %s failed: %s", {k: r[k] for k in AXES}, r["status"])
    rows += _aggregate(rows)

    out = Path(spec.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "sweep.csv", rows)
    sidecar = {"spec": asdict(spec), "spec_hash": spec.spec_hash(), "version": __version__,
               "points": len(jobs), "failed": len(failed)}
    (out / "sweep.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return rows, 1 if failed else 0


def cmd_replay(trace_path, L_B: list[int] | None = None, ratio: float | None = None,
               macs=("ncma", "mud", "su")) -> list[dict]:
    """MAC-variant table on the fixed PHY events of a trace.

    Without ``L_B`` the recorded L values are used. With ``L_B`` each value is
    replayed with ``L_A = round(ratio * L_B)`` (``ratio`` defaults to 1).
    """
    trace = Trace.load(trace_path)
    recorded = trace.config["L"]
    settings = [None] if not L_B else [int(round((ratio or 1.0) * b)) for b in L_B]
    rows = []
    for i, la in enumerate(settings):
        L = dict(recorded) if la is None else {"A": la, "B": int(L_B[i])}
        for mac in macs:
            st = replay(trace, mac=mac, L=L)
            rows.append({"mac": mac, "L_A": L.get("A"), "L_B": L.get("B"),
                         "th_A": st.throughput.get("A", 0.0), "th_B": st.throughput.get("B", 0.0),
                         "th_total": st.total_throughput,
                         "upper_bound": "" if st.upper_bound is None else st.upper_bound})
    return rows


def cmd_stats(trace_path) -> dict:
    trace = Trace.load(trace_path)
    events = [r["event"] for r in trace.records if r["event"] != "SU"]
    counts = {g: 0 for g in GROUPS}
    for e in events:
        counts[event_group(e)] += 1
    out = {"slots": len(trace.records), "two_user_slots": len(events),
           "config_hash": trace.diagnostics.get("config_hash", "")}
    if events:
        freqs = {g: c / len(events) for g, c in counts.items()}
        out.update(groups=freqs, upper_bound=upper_bound(freqs))
    return out


def _session_from_args(a) -> SessionConfig:
    L_A = a.L_A if a.L_A is not None else 16
    L_B = a.L_B if a.L_B is not None else L_A
    return SessionConfig(nodes={"A": a.snr_a, "B": a.snr_b if a.snr_b is not None else a.snr_a},
                         L={"A": L_A, "B": L_B}, K=a.K, slots=a.slots, variant=a.variant,
                         channel=a.channel, alpha=a.alpha, seed=a.seed)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncma", description="Network-coded multiple access simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one session")
    r.add_argument("--snr-a", type=float, default=10.0)
    r.add_argument("--snr-b", type=float, default=None, help="defaults to --snr-a")
    r.add_argument("--L-A", dest="L_A", type=int, default=None)
    r.add_argument("--L-B", dest="L_B", type=int, default=None)
    r.add_argument("--K", type=int, default=64)
    r.add_argument("--slots", type=int, default=1000)
    r.add_argument("--variant", choices=sorted(VARIANTS), default="NCMA-RMUD")
    r.add_argument("--channel", choices=MODELS, default="fixed-phase")
    r.add_argument("--alpha", type=float, default=0.228)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trace", type=Path, help="write the slot trace here")

    s = sub.add_parser("sweep", help="grid sweep from a config file")
    s.add_argument("--config", help=f"config file (default ${CONFIG_ENV})")
    s.add_argument("--output", "-o", help="output directory")
    s.add_argument("--seed", type=int)
    s.add_argument("--variant", nargs="+", choices=sorted(VARIANTS))
    s.add_argument("--snr-a", nargs="+", type=float)
    s.add_argument("--snr-b", nargs="+", type=float)
    s.add_argument("--L-A", dest="L_A", nargs="+", type=int)
    s.add_argument("--L-B", dest="L_B", nargs="+", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--channel", choices=MODELS)
    s.add_argument("--slots", type=int)
    s.add_argument("--repetitions", type=int)
    s.add_argument("--workers", type=int, default=1)

    rp = sub.add_parser("replay", help="compare MAC variants on a recorded trace")
    rp.add_argument("trace", type=Path)
    rp.add_argument("--L-B", dest="L_B", nargs="+", type=int)
    rp.add_argument("--ratio", type=float, default=1.0, help="L_A / L_B when --L-B is given")
    rp.add_argument("--output", "-o", type=Path, help="CSV path (stdout if absent)")

    st = sub.add_parser("stats", help="event statistics of a trace")
    st.add_argument("trace", type=Path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = _session_from_args(args)
            stats, trace = run_session(cfg)
            if args.trace:
                trace.save(args.trace)
            print(json.dumps({"stats": stats.to_dict(), "diagnostics": trace.diagnostics},
                             indent=2, sort_keys=True))
            return 0
        if args.command == "sweep":
            spec = load_spec(args.config)
            for key in ("output", "seed", "alpha", "channel", "slots", "repetitions"):
                if getattr(args, key) is not None:
                    setattr(spec, key, getattr(args, key))
            for key in AXES:
                if getattr(args, key) is not None:
                    setattr(spec, key, getattr(args, key))
            rows, code = cmd_sweep(spec, args.workers)
            print(f"{sum(r['kind'] == 'point' for r in rows)} points -> {Path(spec.output) / 'sweep.csv'}")
            return code
        if args.command == "replay":
            rows = cmd_replay(args.trace, args.L_B, args.ratio)
            fields = ["mac", "L_A", "L_B", "th_A", "th_B", "th_total", "upper_bound"]
            if args.output:
                _write_csv(args.output, rows, fields)
            else:
                w = csv.DictWriter(sys.stdout, fieldnames=fields)
                w.writeheader()
                w.writerows(rows)
            return 0
        if args.command == "stats":
            print(json.dumps(cmd_stats(args.trace), indent=2, sort_keys=True))
            return 0
    except (ConfigError, TraceError, OSError) as e:
        print(f"ncma: error: {e}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
