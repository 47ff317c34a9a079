"""Command-line entry point: ``richris validate|calibrate|sweep|figures``.

Exit codes: 0 success, 1 validation or consistency failure, 2 runtime or
numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from richris import __version__, calibration
from richris.engine import ChannelEngine
from richris.optimizer import (
    CodeBookError,
    Objective,
    ObjectiveKind,
    PairError,
    entry_seed,
    greedy_bitflip,
    optimize_pair,
    random_pool_best,
    resolution_sweep,
)
from richris.physics import SingularChannelError
from richris.pipeline import CalibrationMismatch, rssi_constellation, snr_sweep
from richris.scenario import (
    SHAPES,
    PerturberState,
    ScenarioError,
    ScenarioSpec,
    check_trajectory_clearance,
    object_footprint,
    static_layout,
)
from richris.inference import InferenceError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("richris")


def parse_snr_grid(text):
    """``a:b:step`` (inclusive of b) or a comma-separated list."""
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise argparse.ArgumentTypeError("SNR grid must be a:b:step with a <= b and step > 0")
        a, b, step = parts
        n = int(math.floor((b - a) / step + 1e-9)) + 1
        return [a + i * step for i in range(n)]
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR grid {text!r}") from None


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, header, rows, meta):
    """CSV with ``#`` metadata rows (seed, scenario hash, version first)."""
    with open(path, "w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def read_csv(path):
    """Metadata dict and data rows of a file written by :func:`write_csv`."""
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            else:
                lines.append(line)
    rows = list(csv.DictReader(lines))
    return meta, rows


# ---------------------------------------------------------------- validate


def cmd_validate(args):
    path = args.scenario
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"INVALID {path}: JSON syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}")
        return EXIT_INVALID
    try:
        spec = ScenarioSpec.from_dict(doc)
    except ScenarioError as exc:
        print(f"INVALID {path}: {exc}")
        return EXIT_INVALID
    pos, _, index, groups = static_layout(spec)
    obj = {sh.name.lower(): len(object_footprint(sh, (0.0, 0.0), spec.geometry)) for sh in SHAPES}
    worst, problems = check_trajectory_clearance(spec)
    print(f"scenario {path}")
    print(f"  hash {spec.hash}")
    n_static = len(pos)
    print(f"  static dipoles {n_static} (walls {len(index['wall'])}, ris {len(index['ris'])}, "
          f"transceivers {len(index['tx']) + len(index['ue']) + len(index['aux'])})")
    print("  object dipoles " + ", ".join(f"{k} {v} (total {n_static + v})" for k, v in obj.items()))
    print(f"  macro-pixels {len(groups)} x {groups.shape[1]} elements; aux receivers {len(index['aux'])}")
    print(f"  trajectory length {spec.trajectory.length:.4f} wavelengths; worst clearance {worst:.3f}")
    if problems:
        for shape, p, c in problems[:10]:
            print(f"  clearance violation: {shape} at p={p:.3f} (distance {c:.3f})")
        print("INVALID: object violates the clearance along the trajectory")
        return EXIT_INVALID
    print("VALID")
    return EXIT_OK


# ---------------------------------------------------------------- calibrate


def cmd_calibrate(args):
    fields = {}
    if args.manifest:
        with open(args.manifest) as fh:
            fields.update(json.load(fh))
    if args.scenario is not None:
        fields["scenario_path"] = str(Path(args.scenario).resolve())
    for key in ("seed", "resolution", "positions_a", "positions_b"):
        if getattr(args, key) is not None:
            fields[key] = getattr(args, key)
    if args.epochs is not None:
        fields.setdefault("mode_a", {"snr_range": [-20.0, 40.0]})["epochs"] = args.epochs
        fields.setdefault("mode_b", {})["epochs"] = args.epochs
    manifest = calibration.Manifest.from_dict(fields)
    art = calibration.calibrate(manifest)
    out = calibration.save(art, args.out)
    rep = art.report
    print(f"calibrated {out}: {rep['n_bins']} bins, {rep['n_entries']} entries, "
          f"{len(art.bank_b.pairs)} Mode B model pairs, p_ref={art.p_ref:.6g}")
    if not rep["all_separated"]:
        print("some code-book entries are not separated (r1 <= r0)")
        return EXIT_RUNTIME
    return EXIT_OK


# ---------------------------------------------------------------- sweep


def _meta(art, seed, **extra):
    return {"seed": seed, "scenario_hash": art.scenario_hash, "version": __version__, **extra}


def cmd_sweep(args):
    art = calibration.load(args.artifacts, args.scenario)
    engine = ChannelEngine(art.scenario, cache_size=1024)
    seed = art.manifest.seed if args.seed is None else args.seed
    rows = snr_sweep(engine, args.snr, args.episodes, args.symbols, art.codebook, art.bank_a, art.bank_b,
                     art.baseline, seed=seed, p_ref=art.p_ref)
    out = Path(args.out or args.artifacts)
    out.mkdir(parents=True, exist_ok=True)
    meta = _meta(art, seed, episodes=args.episodes, symbols_per_episode=args.symbols, bootstrap=8)
    write_csv(out / "ber.csv", ["snr_db", "strategy", "ber", "stderr", "n_symbols"],
              [(r.snr_db, r.strategy.value, r.ber, r.ber_se, r.n_symbols) for r in rows], meta)
    write_csv(out / "accuracy.csv", ["snr_db", "strategy", "shape_accuracy", "stderr"],
              [(r.snr_db, r.strategy.value, r.shape_accuracy, r.shape_accuracy_se) for r in rows], meta)
    write_csv(out / "localization.csv", ["snr_db", "strategy", "error_wavelengths", "stderr"],
              [(r.snr_db, r.strategy.value, r.localization_error, r.localization_error_se) for r in rows], meta)
    write_csv(out / "levels.csv", ["snr_db", "strategy", "level0", "level0_stderr", "level1", "level1_stderr"],
              [(r.snr_db, r.strategy.value, r.level0, r.level0_se, r.level1, r.level1_se) for r in rows], meta)
    for r in rows:
        print(f"{r.snr_db:6.1f} dB {r.strategy.value:17s} BER {r.ber:.4f} +- {r.ber_se:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------- figures


def cmd_figures(args):
    art = calibration.load(args.artifacts, args.scenario)
    engine = ChannelEngine(art.scenario, cache_size=1024)
    seed = art.manifest.seed if args.seed is None else args.seed
    out = Path(args.out or args.artifacts)
    out.mkdir(parents=True, exist_ok=True)
    meta = _meta(art, seed)
    length = engine.trajectory_length

    state_a = PerturberState(0.25, SHAPES[0])
    state_b = PerturberState(0.75, SHAPES[0])
    pair_a = optimize_pair(engine, state_a, entry_seed(seed, 0, 0))
    pair_b = optimize_pair(engine, state_b, entry_seed(seed, 1, 0))
    rows = []
    for panel, state, native, cross in (("A", state_a, pair_a, pair_b), ("B", state_b, pair_b, pair_a)):
        c = rssi_constellation(engine, state, args.random, native, cross, seed=seed)
        rows += [(panel, "random", "", i, z.real, z.imag, abs(z)) for i, z in enumerate(c.random)]
        rows += [(panel, "native", b, 0, z.real, z.imag, abs(z)) for b, z in enumerate(c.native)]
        rows += [(panel, "cross", b, 0, z.real, z.imag, abs(z)) for b, z in enumerate(c.cross)]
    write_csv(out / "constellation.csv", ["panel", "kind", "symbol", "index", "re", "im", "magnitude"], rows,
              {**meta, "state_a": state_a.p, "state_b": state_b.p})

    objective = Objective(ObjectiveKind.MAX_RSSI, state_a)
    start, _ = random_pool_best(engine, objective, seed=seed)
    g = greedy_bitflip(engine, objective, start)
    per_sweep = engine.n_pixels
    write_csv(out / "greedy_trace.csv", ["iteration", "sweep", "score"],
              [(i, 0 if i == 0 else (i - 1) // per_sweep + 1, s) for i, s in enumerate(g.trace)],
              {**meta, "sweeps": g.sweeps, "accepted": g.accepted})

    resolutions = [length / n for n in (64, 32, 16, 8, 4, 2)]
    positions = np.random.default_rng(seed).uniform(0.0, 1.0, args.positions)
    res = resolution_sweep(engine, sorted(resolutions), positions, SHAPES[0], seed=seed)
    write_csv(out / "resolution.csv", ["resolution", "ratio", "stderr", "n_bins"], res,
              {**meta, "positions": args.positions})
    print(f"figures written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser():
    p = argparse.ArgumentParser(prog="richris", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("calibrate", help="build the code book and inference banks")
    c.add_argument("--scenario", help="scenario JSON (default: the shipped scenario)")
    c.add_argument("--seed", type=int)
    c.add_argument("--resolution", type=float, help="code-book resolution in wavelengths (default 0.375)")
    c.add_argument("--out", required=True, help="artifact directory")
    c.add_argument("--manifest", help="JSON file with further manifest fields")
    c.add_argument("--positions-a", dest="positions_a", type=int, help="training positions for Mode A")
    c.add_argument("--positions-b", dest="positions_b", type=int, help="training positions for Mode B")
    c.add_argument("--epochs", type=int, help="training epochs for both modes")
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("sweep", help="BER, accuracy, localization and level curves over SNR")
    s.add_argument("--artifacts", required=True)
    s.add_argument("--snr", type=parse_snr_grid, default=parse_snr_grid("-10:30:10"), help="a:b:step in dB")
    s.add_argument("--episodes", type=int, default=60)
    s.add_argument("--symbols", type=int, default=208, help="symbols per episode, bootstrap included")
    s.add_argument("--seed", type=int)
    s.add_argument("--scenario", help="scenario to check against the artifacts")
    s.add_argument("--out", help="output directory (default: the artifact directory)")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("figures", help="constellation, greedy trace and resolution data")
    f.add_argument("--artifacts", required=True)
    f.add_argument("--random", type=int, default=100, help="random configurations per constellation panel")
    f.add_argument("--positions", type=int, default=50, help="evaluation positions for the resolution sweep")
    f.add_argument("--seed", type=int)
    f.add_argument("--scenario")
    f.add_argument("--out")
    f.set_defaults(func=cmd_figures)
    return p


INVALID_ERRORS = (ScenarioError, calibration.ArtifactError, CalibrationMismatch, FileNotFoundError,
                  json.JSONDecodeError)
RUNTIME_ERRORS = (SingularChannelError, np.linalg.LinAlgError, CodeBookError, PairError, InferenceError,
                  ArithmeticError, RuntimeError, ValueError)


def _bind_snr(argv):
    # "--snr -10:30:10" would otherwise read the grid as an option
    out = []
    it = iter(argv)
    for a in it:
        if a == "--snr":
            out.append("--snr=" + next(it, ""))
        else:
            out.append(a)
    return out


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(_bind_snr(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except INVALID_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RUNTIME_ERRORS as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
