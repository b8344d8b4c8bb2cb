"""Command-line entry point: ``patchflow run | bench-fusion | validate-mesh``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .errors import ConfigError, MeshError, NonPositiveState, SolverBlowup

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_MESH = 0, 2, 3, 4


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    from .driver import RunConfig
    p.add_argument("--config", help="flat key = value file; flags override its entries")
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool":
            p.add_argument(flag, dest=f.name, nargs="?", const="true", default=None,
                           metavar="BOOL")
        else:
            p.add_argument(flag, dest=f.name, default=None)


def _cmd_run(args) -> int:
    from .driver import RunConfig, make_config, parse_config_text, run_simulation
    base = {}
    if args.config:
        try:
            base = parse_config_text(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    flags = {f.name: getattr(args, f.name) for f in dataclasses.fields(RunConfig)}
    cfg = make_config(base, **flags)
    res = run_simulation(cfg)
    drift = res.conservation_drift
    print(f"case={cfg.case} steps={res.steps} t={res.t:.6g} "
          f"mass_drift={drift[0]:.3e} energy_drift={drift[3]:.3e}")
    if cfg.check_symmetry:
        print(f"max_symmetry_error={res.max_symmetry_error:.3e}")
    if res.sod_l1 is not None:
        print(f"sod_l1={res.sod_l1:.5f} sod_overshoot={res.sod_overshoot:.4f}")
    for path in res.snapshots:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .bench import fusion_benchmark, speedups
    from .driver import make_config
    try:
        sizes = [int(s) for s in args.patch_sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --patch-sizes {args.patch_sizes!r}") from exc
    base = make_config(case=args.case, scheme=args.scheme, n=args.grid, patch=min(sizes))
    rows = fusion_benchmark(args.grid, sizes, base, iters=args.iters,
                            injected_overhead=args.overhead, workers=args.workers, out=args.out,
                            repeats=args.repeats)
    for ps, s in speedups(rows).items():
        print(f"patch {ps:4d}: fine/fused speedup {s:.2f}")
    if args.out:
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .mesh import Mesh
    try:
        text = Path(args.replay).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.replay}: {exc}") from exc
    try:
        m = Mesh.load(text)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"malformed mesh dump {args.replay}: {exc}") from exc
    bad = m.validate()
    for v in bad:
        print(f"{v.kind} pid={v.pid}: {v.detail}")
    if bad:
        return EXIT_MESH
    print(f"mesh ok: {m.num_active} active patches, {len(m.leaves())} leaves, "
          f"max level {m.max_level}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="patchflow")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a simulation case")
    _add_run_flags(run)
    run.set_defaults(func=_cmd_run)

    b = sub.add_parser("bench-fusion", help="fine vs fused task granularity benchmark")
    b.add_argument("--patch-sizes", default="16,32,64,128,256")
    b.add_argument("--grid", type=int, default=256)
    b.add_argument("--iters", type=int, default=2)
    b.add_argument("--repeats", type=int, default=1,
                   help="timed blocks per row; the fastest is kept")
    b.add_argument("--overhead", type=float, default=50e-6,
                   help="injected dispatch cost per task in seconds")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--case", default="implosion")
    b.add_argument("--scheme", default="weno5")
    b.add_argument("--out", default=None)
    b.set_defaults(func=_cmd_bench)

    v = sub.add_parser("validate-mesh", help="check R1/R2 and link consistency of a mesh dump")
    v.add_argument("--replay", required=True)
    v.set_defaults(func=_cmd_validate)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverBlowup, NonPositiveState) as exc:
        where = ""
        if isinstance(exc, SolverBlowup):
            where = f" (step {exc.step}, stage {exc.stage}, patch {exc.patch}, node {exc.node})"
        print(f"solver blow-up{where}: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except MeshError as exc:
        print(f"mesh violation: {exc}", file=sys.stderr)
        return EXIT_MESH


if __name__ == "__main__":
    sys.exit(main())
