"""Command-line front end.

Subcommands: basis, evolve, disorder-sweep, entropy-scan, defect-study,
verify. Every experiment writes delimited data plus JSON sidecars and a
manifest into its output directory, and (unless --no-plot) rendered figures
next to them. `verify` recomputes a finished run from its manifest and
compares digests.

Configuration can come from flags, from a JSON file (--config), or both;
flags override the file. The SCARLAB_SEED environment variable overrides the
seed from either source.

Exit codes: 0 success, 2 invalid configuration (first failing field named),
3 computation failure, 4 I/O failure, 5 verification mismatch.
"""

import argparse
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .basis import (
    BoundaryCondition,
    Sector,
    StateLabel,
    enumerate_basis,
    make_state,
)
from .dynamics import time_grid
from .errors import ScarlabError
from .experiments import (
    fit_gaussian_decay,
    quench_series,
    run_defect_study,
    run_disorder_sweep,
)
from .operators import build_hamiltonian, build_pxp, build_perturbation_projected, sample_disorder
from .spectral import entropy_scan
from . import io as sio

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_IO = 4
EXIT_VERIFY = 5

MAX_CLI_SITES = 24  # full-space vectors beyond 2^24 are not desk-scale

_STATE_NAMES = {
    "z2": StateLabel.Z2,
    "z2shift": StateLabel.Z2_SHIFT,
    "z3": StateLabel.Z3,
    "zero": StateLabel.ALL_DOWN,
    "all-down": StateLabel.ALL_DOWN,
    "z2-defect-up": StateLabel.Z2_DEFECT_UP,
    "z2-defect-down": StateLabel.Z2_DEFECT_DOWN,
}


class ConfigError(ValueError):
    def __init__(self, fld: str, message: str):
        super().__init__(f"invalid config field '{fld}': {message}")
        self.field = fld


@dataclass
class ExperimentConfig:
    """Resolved parameters of one CLI run; validated before any computation."""

    command: str
    n: int | None = None
    bc: str = "pbc"
    sector: str = "auto"
    state: str = "z2"
    w: float = 0.0
    w_list: str = "0"
    realizations: int = 10
    seed: int = 42
    t_max: float = 30.0
    dt: float = 0.05
    t_exclude: float = 1.0
    cut: int | None = None
    defect_site: int | None = None
    defect_up_site: int | None = None
    defect_down_site: int | None = None
    krylov_dim: int = 30
    tol: float = 1e-10
    dense_ceiling: int = 4096
    threads: int | None = None
    out: str | None = None
    plot: bool = True


def parse_w_values(text: str) -> list[float]:
    """`start:stop:step` (inclusive endpoints within half a step) or a comma list."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range syntax is start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("step must be positive")
        count = int(np.floor((stop - start) / step + 0.5))
        vals = [round(start + k * step, 12) for k in range(count + 1)]
        return [v for v in vals if v <= stop + step / 2]
    return [float(p) for p in text.split(",") if p.strip()]


def _require(cond, fld, message):
    if not cond:
        raise ConfigError(fld, message)


def validate_config(cfg: ExperimentConfig):
    if cfg.command != "verify":
        _require(cfg.n is not None, "n", "chain length is required")
        _require(2 <= cfg.n <= MAX_CLI_SITES, "n",
                 f"must be in [2, {MAX_CLI_SITES}]")
        _require(cfg.bc in ("obc", "pbc"), "bc", "must be obc or pbc")
    if cfg.command in ("evolve", "disorder-sweep"):
        _require(cfg.state in _STATE_NAMES, "state",
                 f"must be one of {sorted(_STATE_NAMES)}")
    if cfg.command == "basis":
        _require(cfg.sector in ("full", "constrained"), "sector",
                 "must be full or constrained")
    elif cfg.command == "evolve":
        _require(cfg.sector in ("auto", "full", "constrained"), "sector",
                 "must be auto, full or constrained")
    if cfg.command in ("evolve", "disorder-sweep", "defect-study"):
        _require(cfg.t_max > 0, "t_max", "must be positive")
        _require(cfg.dt > 0, "dt", "must be positive")
        _require(round(cfg.t_max / cfg.dt) >= 1
                 and abs(round(cfg.t_max / cfg.dt) * cfg.dt - cfg.t_max) <= cfg.dt / 2,
                 "dt", f"does not tile t_max={cfg.t_max}")
        _require(cfg.krylov_dim >= 2, "krylov_dim", "must be at least 2")
        _require(cfg.tol > 0, "tol", "must be positive")
    if cfg.command == "evolve":
        _require(cfg.w >= 0, "w", "disorder strength must be nonnegative")
    if cfg.command in ("disorder-sweep", "entropy-scan"):
        try:
            vals = parse_w_values(cfg.w_list)
        except ValueError as exc:
            raise ConfigError("w_list", str(exc)) from None
        _require(len(vals) > 0, "w_list", "empty list")
        _require(all(v >= 0 for v in vals), "w_list", "strengths must be nonnegative")
    if cfg.command == "disorder-sweep":
        _require(cfg.realizations >= 1, "realizations", "must be at least 1")
        _require(cfg.t_exclude >= 0, "t_exclude", "must be nonnegative")
        _require(cfg.t_exclude < cfg.t_max, "t_exclude", "must lie inside the grid")
    if cfg.command == "entropy-scan":
        cut = cfg.cut if cfg.cut is not None else cfg.n // 2
        _require(1 <= cut <= cfg.n - 1, "cut", f"must be in [1, {cfg.n - 1}]")
    if cfg.command == "defect-study":
        _require(cfg.n % 2 == 0, "n", "the defect study needs an even ring")
        _require(cfg.bc == "pbc", "bc", "the defect study is defined on a ring")
        _require(cfg.n >= 8, "n", "the frozen-region reduction needs at least 8 sites")
    if cfg.threads is not None:
        _require(cfg.threads >= 1, "threads", "must be at least 1")


def _resolve_sector(cfg: ExperimentConfig) -> Sector:
    if cfg.sector == "full":
        return Sector.FULL
    if cfg.sector == "constrained":
        return Sector.CONSTRAINED
    # auto: the bare disorder fields and the up-flipped defect need the full space
    if cfg.w > 0 or _STATE_NAMES[cfg.state] is StateLabel.Z2_DEFECT_UP:
        return Sector.FULL
    return Sector.CONSTRAINED


def _run_meta(cfg: ExperimentConfig, **extra) -> dict:
    meta = {
        "command": cfg.command,
        "n": cfg.n,
        "boundary": cfg.bc,
        "seed": cfg.seed,
    }
    meta.update(extra)
    return meta


# -- subcommand implementations -----------------------------------------------------


def cmd_basis(cfg: ExperimentConfig, out: Path):
    basis = enumerate_basis(cfg.n, BoundaryCondition(cfg.bc), Sector(cfg.sector))
    path = out / "basis.csv"
    sio.write_basis_csv(path, basis)
    sio.write_json(
        out / "basis.json",
        _run_meta(cfg, sector=cfg.sector, size=basis.size,
                  columns=["index", "bitstring", "pattern"]),
    )
    print(f"basis: {basis.size} configurations -> {path}")
    return [path, out / "basis.json"], []


def cmd_evolve(cfg: ExperimentConfig, out: Path):
    sector = _resolve_sector(cfg)
    basis = enumerate_basis(cfg.n, BoundaryCondition(cfg.bc), sector)
    disorder = sample_disorder(cfg.n, cfg.w, cfg.seed) if cfg.w > 0 else None
    H = build_hamiltonian(basis, disorder)
    label = _STATE_NAMES[cfg.state]
    psi0 = make_state(label, basis, defect_site=cfg.defect_site)
    times = time_grid(cfg.t_max, cfg.dt)
    qs = quench_series(
        H, psi0, times, krylov_dim=cfg.krylov_dim, tol=cfg.tol
    )
    meta = _run_meta(
        cfg, sector=sector.value, w=cfg.w, state=label.value,
        t_max=cfg.t_max, dt=cfg.dt, max_norm_drift=qs.max_norm_drift,
    )
    if disorder is not None:
        meta["disorder"] = disorder.to_dict()
    files = []
    for name, series in (("fidelity", qs.fidelity), ("correlation", qs.correlation)):
        path = out / f"{name}.csv"
        sio.write_timeseries(path, series, {**meta, "series": name})
        files += [path, path.with_suffix(".json")]
    figures = []
    if cfg.plot:
        from . import plots

        figures.append(
            plots.save_quench_figure(
                out / "evolve.png",
                {cfg.state: qs.fidelity},
                {cfg.state: qs.correlation},
                title=f"N={cfg.n} {cfg.bc} {cfg.state} W={cfg.w:g}",
            )
        )
    print(
        f"evolve: {len(times)} grid points, final fidelity "
        f"{qs.fidelity.values[-1]:.4f} -> {out}"
    )
    return files, figures


def cmd_disorder_sweep(cfg: ExperimentConfig, out: Path):
    w_values = parse_w_values(cfg.w_list)
    times = time_grid(cfg.t_max, cfg.dt)
    result = run_disorder_sweep(
        cfg.n, BoundaryCondition(cfg.bc), _STATE_NAMES[cfg.state], w_values,
        cfg.realizations, cfg.seed, times, t_exclude=cfg.t_exclude,
        krylov_dim=cfg.krylov_dim, tol=cfg.tol, max_workers=cfg.threads,
    )
    # the three-parameter decay fit needs at least four strengths
    fit = (
        fit_gaussian_decay(result.w_values, result.mean_peaks)
        if result.w_values.size >= 4
        else None
    )
    peaks_path = out / "peaks.csv"
    sio.write_csv(
        peaks_path, zip(result.w_values, result.mean_peaks, result.stderr_peaks)
    )
    meta = _run_meta(
        cfg, sector="full", state=cfg.state, w_values=list(result.w_values),
        realizations=cfg.realizations, t_max=cfg.t_max, dt=cfg.dt,
        t_exclude=cfg.t_exclude,
        columns=["w", "mean_peak", "stderr_peak"],
        peaks=result.peaks.tolist(), peak_times=result.peak_times.tolist(),
    )
    sio.write_json(out / "peaks.json", meta)
    files = [peaks_path, out / "peaks.json"]
    if fit is not None:
        fit_path = out / "fit.json"
        sio.write_json(
            fit_path,
            {"a": fit.a, "b": fit.b, "c": fit.c,
             "residual_norm": fit.residual_norm, "converged": fit.converged},
        )
        files.append(fit_path)
    figures = []
    if cfg.plot:
        from . import plots

        figures.append(
            plots.save_sweep_figure(
                out / "sweep.png", result, fit,
                title=f"N={cfg.n} {cfg.state} peak decay, R={cfg.realizations}",
            )
        )
    fit_note = f"fit b={fit.b:.3f} (converged={fit.converged})" if fit else "no fit (<4 strengths)"
    print(
        f"disorder-sweep: {len(w_values)} strengths x {cfg.realizations} "
        f"realizations, {fit_note} -> {out}"
    )
    return files, figures


def cmd_entropy_scan(cfg: ExperimentConfig, out: Path):
    w_values = parse_w_values(cfg.w_list)
    cut = cfg.cut if cfg.cut is not None else cfg.n // 2
    basis = enumerate_basis(cfg.n, BoundaryCondition(cfg.bc), Sector.CONSTRAINED)
    pxp = build_pxp(basis)
    files = []
    scatters = []
    for w in w_values:
        if w > 0:
            H = pxp + build_perturbation_projected(
                basis, sample_disorder(cfg.n, w, cfg.seed)
            )
        else:
            H = pxp
        scatter = entropy_scan(H, cut, strength=w, seed=cfg.seed,
                               ceiling=cfg.dense_ceiling)
        scatters.append(scatter)
        path = out / f"entropy_w{w:g}.csv"
        sio.write_entropy_scatter(
            path, scatter,
            _run_meta(cfg, sector="constrained", w=w, cut=cut, size=basis.size),
        )
        files += [path, path.with_suffix(".json")]
    figures = []
    if cfg.plot:
        from . import plots

        figures.append(
            plots.save_entropy_figure(
                out / "entropy.png", scatters,
                title=f"N={cfg.n} {cfg.bc} eigenstate entropy, cut={cut}",
            )
        )
    print(
        f"entropy-scan: {len(w_values)} strengths, {basis.size} eigenstates "
        f"each -> {out}"
    )
    return files, figures


def cmd_defect_study(cfg: ExperimentConfig, out: Path):
    times = time_grid(cfg.t_max, cfg.dt)
    study = run_defect_study(
        cfg.n, BoundaryCondition(cfg.bc), times,
        defect_up_site=cfg.defect_up_site,
        defect_down_site=cfg.defect_down_site,
        dense_ceiling=cfg.dense_ceiling,
        krylov_dim=cfg.krylov_dim,
    )
    files = []
    base_meta = _run_meta(
        cfg, t_max=cfg.t_max, dt=cfg.dt,
        defect_up_site=study.defect_up_site,
        defect_down_site=study.defect_down_site,
        frozen_sites=list(study.reduction.frozen_sites),
        reduced_n=study.reduction.reduced_n,
    )
    for key, series in study.fidelity.items():
        path = out / f"fidelity_{key}.csv"
        sio.write_timeseries(path, series, {**base_meta, "series": f"fidelity/{key}"})
        files += [path, path.with_suffix(".json")]
    for key, series in study.correlation.items():
        path = out / f"correlation_{key}.csv"
        sio.write_timeseries(path, series, {**base_meta, "series": f"correlation/{key}"})
        files += [path, path.with_suffix(".json")]
    if study.overlaps is not None:
        for key, spectrum in study.overlaps.items():
            path = out / f"overlap_{key}.csv"
            sio.write_overlap_spectrum(
                path, spectrum, {**base_meta, "series": f"overlap/{key}"}
            )
            files += [path, path.with_suffix(".json")]
    figures = []
    if cfg.plot:
        from . import plots

        figures.append(
            plots.save_defect_figure(
                out / "defect.png", study, title=f"N={cfg.n} defect study"
            )
        )
        if study.overlaps is not None:
            figures.append(
                plots.save_overlap_figure(
                    out / "overlap.png", study.overlaps,
                    title=f"N={cfg.n} eigenbasis overlaps",
                )
            )
    print(f"defect-study: N={cfg.n}, reduced chain {study.reduction.reduced_n} "
          f"sites -> {out}")
    return files, figures


_COMMANDS = {
    "basis": cmd_basis,
    "evolve": cmd_evolve,
    "disorder-sweep": cmd_disorder_sweep,
    "entropy-scan": cmd_entropy_scan,
    "defect-study": cmd_defect_study,
}


def execute(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """Run one experiment into out_dir and write its manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    data_files, figures = _COMMANDS[cfg.command](cfg, out_dir)
    params = asdict(cfg)
    params.pop("out", None)
    params.pop("plot", None)
    params.pop("threads", None)
    manifest = sio.build_manifest(cfg.command, params, out_dir, data_files, figures)
    manifest["version"] = __version__
    sio.write_manifest(out_dir, manifest)
    return manifest


def cmd_verify(directory: str, threads: int | None) -> int:
    manifest = sio.load_manifest(directory)
    params = dict(manifest["params"])
    cfg = ExperimentConfig(**params)
    cfg.plot = False
    cfg.threads = threads
    validate_config(cfg)
    mismatches = []
    with tempfile.TemporaryDirectory(prefix="scarlab-verify-") as tmp:
        fresh = execute(cfg, Path(tmp))
        recorded = manifest["outputs"]
        recomputed = fresh["outputs"]
        for rel, digest in sorted(recorded.items()):
            target = Path(directory) / rel
            on_disk = sio.sha256_file(target) if target.exists() else None
            if on_disk != digest:
                status = "MISMATCH (file differs from manifest)"
            elif recomputed.get(rel) != digest:
                status = "MISMATCH (recompute differs)"
            else:
                status = "ok"
            if status != "ok":
                mismatches.append(rel)
            print(f"verify {rel}: {status}")
        for rel in sorted(set(recomputed) - set(recorded)):
            print(f"verify {rel}: not in manifest")
    if mismatches:
        print(f"verification failed for {len(mismatches)} file(s)", file=sys.stderr)
        return EXIT_VERIFY
    print("verification passed: all digests match")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scarlab",
        description="Exact dynamics of the blockaded spin chain: revivals, "
                    "disorder robustness, defect studies.",
        epilog="Exit codes: 0 success, 2 invalid configuration, "
               "3 computation failure, 4 I/O failure, 5 verification mismatch.",
    )
    parser.add_argument("--version", action="version", version=f"scarlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=True, krylov=True):
        p.add_argument("--config", help="JSON file with config fields; flags override")
        p.add_argument("--n", type=int, help="number of sites (2..24)")
        p.add_argument("--bc", choices=["obc", "pbc"], help="boundary condition")
        p.add_argument("--seed", type=int, help="master seed (default 42)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
        if grid:
            p.add_argument("--tmax", type=float, dest="t_max", help="grid end (default 30)")
            p.add_argument("--dt", type=float, help="grid spacing (default 0.05)")
        if krylov:
            p.add_argument("--krylov-dim", type=int, dest="krylov_dim",
                           help="Lanczos subspace size (default 30)")
            p.add_argument("--tol", type=float, help="propagation error budget per unit time")

    p = sub.add_parser("basis", help="enumerate a sector and dump it as CSV")
    common(p, grid=False, krylov=False)
    p.add_argument("--sector", choices=["full", "constrained"],
                   help="which sector to enumerate (default constrained)")

    p = sub.add_parser("evolve", help="quench one state and record fidelity/correlation")
    common(p)
    p.add_argument("--state", help="z2 | z2shift | z3 | zero | z2-defect-up | z2-defect-down")
    p.add_argument("--sector", choices=["auto", "full", "constrained"],
                   help="simulation sector (default auto)")
    p.add_argument("--w", type=float, help="disorder strength (default 0)")
    p.add_argument("--defect-site", type=int, dest="defect_site",
                   help="site flipped by defect states (default: middle)")

    p = sub.add_parser("disorder-sweep",
                       help="ensemble of quenches, revival-peak statistics and decay fit")
    common(p)
    p.add_argument("--state", help="initial state (default z2)")
    p.add_argument("--w", dest="w_list",
                   help="strength list: start:stop:step or comma-separated (default 0:0.5:0.05)")
    p.add_argument("--realizations", type=int, help="draws per strength (default 10)")
    p.add_argument("--t-exclude", type=float, dest="t_exclude",
                   help="ignore peaks at t <= this (default 1.0)")
    p.add_argument("--threads", type=int, help="worker processes (default: all cores)")

    p = sub.add_parser("entropy-scan",
                       help="eigenstate entanglement entropy under projected disorder")
    common(p, grid=False, krylov=False)
    p.add_argument("--w", dest="w_list",
                   help="strength list (default 0,0.05,0.1)")
    p.add_argument("--cut", type=int, help="left block size (default N/2)")
    p.add_argument("--dense-ceiling", type=int, dest="dense_ceiling",
                   help="refuse dense work beyond this dimension (default 4096)")

    p = sub.add_parser("defect-study",
                       help="single-flip defects of the period-2 state on a ring")
    common(p)
    p.add_argument("--defect-up-site", type=int, dest="defect_up_site")
    p.add_argument("--defect-down-site", type=int, dest="defect_down_site")
    p.add_argument("--dense-ceiling", type=int, dest="dense_ceiling",
                   help="diagonalization ceiling for the overlap spectra (default 4096)")

    p = sub.add_parser("verify", help="recompute a run from its manifest and compare digests")
    p.add_argument("--dir", required=True, help="directory containing manifest.json")
    p.add_argument("--threads", type=int, help="worker processes for the recompute")

    return parser


_DEFAULT_W_LISTS = {"disorder-sweep": "0:0.5:0.05", "entropy-scan": "0,0.05,0.1"}
_DEFAULT_SECTORS = {"basis": "constrained", "evolve": "auto"}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(command=args.command)
    cfg.w_list = _DEFAULT_W_LISTS.get(args.command, cfg.w_list)
    cfg.sector = _DEFAULT_SECTORS.get(args.command, cfg.sector)
    if getattr(args, "config", None):
        try:
            file_cfg = sio.read_json(args.config)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from None
        for key, value in file_cfg.items():
            if key == "command":
                continue
            if not hasattr(cfg, key):
                raise ConfigError(key, "unknown config field")
            setattr(cfg, key, value)
    for key, value in vars(args).items():
        if key in ("command", "config", "no_plot") or value is None:
            continue
        setattr(cfg, key, value)
    if getattr(args, "no_plot", False):
        cfg.plot = False
    env_seed = os.environ.get("SCARLAB_SEED")
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise ConfigError("seed", f"SCARLAB_SEED={env_seed!r} is not an integer") from None
    return cfg


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "verify":
        try:
            return cmd_verify(args.dir, args.threads)
        except (FileNotFoundError, OSError) as exc:
            print(f"verify failed: {exc}", file=sys.stderr)
            return EXIT_IO
        except (ConfigError, TypeError) as exc:
            print(f"verify failed: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except ScarlabError as exc:
            print(f"verify failed during recompute: {exc}", file=sys.stderr)
            return EXIT_COMPUTE

    try:
        cfg = resolve_config(args)
        validate_config(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(cfg.out) if cfg.out else Path(f"scarlab_{cfg.command}")
    try:
        execute(cfg, out_dir)
    except ScarlabError as exc:
        print(f"error in {cfg.command} stage: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
