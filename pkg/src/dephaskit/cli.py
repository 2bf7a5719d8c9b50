"""Command-line experiment runner: classify, sweep-sigma, fit, trajectory.

Every run is reproducible: outputs are plain CSV/JSON with fixed formatting,
no timestamps, and a JSON summary that always records delta_n, lambda0_nm,
the classical-set formulation, and the tool version.  Configuration comes
from built-in defaults, then an optional `key = value` config file, then
command-line flags, in that order.  The DEPHASKIT_OUT environment variable
supplies the default output directory.

Exit codes: 0 success, 1 usage or I/O error, 2 numerical/solver failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import (
    DEFAULT_THRESHOLDS,
    DynamicsFamily,
    criteria_report,
    hcl_n,
    write_criteria_csv,
)
from .dynamics import (
    EvolutionParams,
    apply_process_to_half,
    kappa_trajectory,
    process_from_kappa,
    write_kappa_csv,
)
from .errors import DephaskitError, FitError, NonPhysicalChannelError, SolverError
from .qcore import (
    KET_M,
    KET_P,
    KET_PHI_PLUS,
    DensityMatrix,
    concurrence,
    partial_trace,
    trace_distance,
    von_neumann_entropy,
)
from .quantumness import TAG_MEASURE_PREPARE_PPT, alpha, beta
from .spectra import PRESET_THETAS, Spectrum, fit_mixture, load_spectrum, tilt_preset

TRAJECTORY_QUANTITIES = ("kappa", "alpha", "beta", "distance", "concurrence", "mutual-information")

# values reported for the original classical-set formulation of the composite
# criterion; not reproducible under MEASURE_PREPARE_PPT, recorded side by side
ORIGINAL_FORMULATION_REFERENCE = {
    "threshold_sigma_nm": 0.1093,
    "n_alpha_at_sigma_0.1092": 0.0099,
    "n_beta_at_sigma_0.1092": 0.0073,
}


@dataclass
class RunConfig:
    delta_n: float = 0.0115
    lambda0: float = 702.0
    s_max: float = 160.0
    step: float = 0.1
    t1_fraction: float = 0.5
    resolution: float = 0.01
    formulation: str = TAG_MEASURE_PREPARE_PPT
    preset: tuple = PRESET_THETAS
    spectrum: str | None = None
    out_dir: str = ""
    jobs: int = 0  # 0 means available parallelism
    # sweep-sigma specifics
    center: float = 702.672
    sigma_min: float = 0.0
    sigma_max: float = 0.25
    sigma_step: float = 0.001
    # fit / trajectory specifics
    components: int = 2
    quantity: tuple = TRAJECTORY_QUANTITIES

    def __post_init__(self):
        if not (0.0 < self.resolution < 1.0) and self.resolution != 0.0:
            raise DephaskitError("resolution must lie in (0, 1), or 0 to disable")
        if self.formulation != TAG_MEASURE_PREPARE_PPT:
            raise DephaskitError(
                f"unknown formulation {self.formulation!r}; the CLI supports "
                f"{TAG_MEASURE_PREPARE_PPT} (pluggable sets are a library feature)"
            )

    def evolution_params(self) -> EvolutionParams:
        return EvolutionParams(delta_n=self.delta_n, lambda0_nm=self.lambda0)

    def resolved_out_dir(self) -> Path:
        if self.out_dir:
            return Path(self.out_dir)
        return Path(os.environ.get("DEPHASKIT_OUT", "out"))

    def effective_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _summary_base(config: RunConfig) -> dict:
    return {
        "delta_n": config.delta_n,
        "lambda0_nm": config.lambda0,
        "formulation": config.formulation,
        "version": __version__,
    }


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _resolve_spectra(config: RunConfig):
    """(label, Spectrum) pairs from presets or from a fitted sample file."""
    if config.spectrum:
        sample = load_spectrum(config.spectrum)
        report = fit_mixture(sample, n_components=config.components)
        label = Path(config.spectrum).stem
        return [(label, report.spectrum)]
    return [(theta, tilt_preset(theta)) for theta in config.preset]


def _classify_worker(item):
    label, spectrum, cfg = item
    config = RunConfig(**cfg)
    family = DynamicsFamily(
        spectrum=spectrum,
        params=config.evolution_params(),
        s_max=config.s_max,
        step=config.step,
    )
    thresholds = dict(DEFAULT_THRESHOLDS)
    thresholds["hcl_n"] = config.resolution
    return criteria_report(
        family, label=label, t1_fraction=config.t1_fraction, thresholds=thresholds
    )


def run_classify(config: RunConfig, spectra=None):
    """Criteria reports for each preset (or supplied spectra); returns
    (reports, failures) where failures maps labels to error strings."""
    items = spectra if spectra is not None else _resolve_spectra(config)
    cfg = dataclasses.asdict(config)
    work = [(label, spec, cfg) for label, spec in items]
    reports, failures = [], {}
    jobs = config.effective_jobs()
    if jobs > 1 and len(work) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_classify_worker, w) for w in work]
            for w, fut in zip(work, futures):
                try:
                    reports.append(fut.result())
                except (SolverError, DephaskitError, FloatingPointError) as exc:
                    failures[w[0]] = str(exc)
    else:
        for w in work:
            try:
                reports.append(_classify_worker(w))
            except (SolverError, DephaskitError, FloatingPointError) as exc:
                failures[w[0]] = str(exc)
    return reports, failures


def cmd_classify(config: RunConfig) -> int:
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    reports, failures = run_classify(config)
    write_criteria_csv(reports, out / "criteria.csv")
    summary = _summary_base(config)
    summary.update(
        {
            "s_max": config.s_max,
            "step": config.step,
            "t1_fraction": config.t1_fraction,
            "resolution": config.resolution,
            "thresholds": {k: v for k, v in (reports[0].thresholds if reports else DEFAULT_THRESHOLDS).items()},
            "families": {
                r.label: {
                    "W_alpha": r.w_alpha,
                    "W_beta": r.w_beta,
                    "N_alpha": r.n_alpha,
                    "N_beta": r.n_beta,
                    "N_blp": r.n_blp,
                    "N_rhp": r.n_rhp,
                    "N_lfs": r.n_lfs,
                    "verdicts": {k: bool(v) for k, v in r.verdicts.items()},
                }
                for r in reports
            },
            "failures": failures,
        }
    )
    _json_dump(summary, out / "summary.json")
    if failures:
        for label, msg in failures.items():
            print(f"solver failure for {label}: {msg}", file=sys.stderr)
        return 2
    return 0


def _sweep_worker(item):
    sigma, cfg = item
    config = RunConfig(**cfg)
    spectrum = Spectrum.single(config.center, sigma)
    family = DynamicsFamily(
        spectrum=spectrum,
        params=config.evolution_params(),
        s_max=config.s_max,
        step=config.step,
    )
    n_a = hcl_n(family, config.s_max, config.t1_fraction, "alpha")
    n_b = hcl_n(family, config.s_max, config.t1_fraction, "beta")
    return n_a, n_b


@dataclass(frozen=True)
class SweepResult:
    sigmas: np.ndarray
    n_alpha: np.ndarray
    n_beta: np.ndarray
    threshold_sigma: float | None


def run_sweep_sigma(config: RunConfig) -> SweepResult:
    """Composite-criterion measures on a sigma grid for a single-line spectrum.

    threshold_sigma is the largest grid sigma at and below which both
    measures stay under the resolution (absent when resolution is 0).
    """
    n = int(round((config.sigma_max - config.sigma_min) / config.sigma_step))
    sigmas = config.sigma_min + config.sigma_step * np.arange(n + 1)
    cfg = dataclasses.asdict(config)
    work = [(float(s), cfg) for s in sigmas]
    jobs = config.effective_jobs()
    if jobs > 1 and len(work) > 8:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, work, chunksize=16))
    else:
        results = [_sweep_worker(w) for w in work]
    n_a = np.array([r[0] for r in results])
    n_b = np.array([r[1] for r in results])
    worst = np.maximum(n_a, n_b)
    if np.any(np.diff(worst) < -1e-12):
        raise SolverError("sweep measures are not monotone nondecreasing in sigma")
    threshold = None
    if config.resolution > 0.0:
        below = worst < config.resolution
        if below[0]:
            first_violation = np.argmin(below) if not below.all() else len(below)
            threshold = float(sigmas[first_violation - 1])
    return SweepResult(sigmas=sigmas, n_alpha=n_a, n_beta=n_b, threshold_sigma=threshold)


def cmd_sweep_sigma(config: RunConfig) -> int:
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    result = run_sweep_sigma(config)
    with open(out / "sweep_sigma.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sigma_nm,n_alpha,n_beta\n")
        for s, a, b in zip(result.sigmas, result.n_alpha, result.n_beta):
            fh.write(f"{_fmt(s)},{_fmt(a)},{_fmt(b)}\n")
    summary = _summary_base(config)
    summary.update(
        {
            "center_nm": config.center,
            "s_max": config.s_max,
            "t1_fraction": config.t1_fraction,
            "resolution": config.resolution,
            "sigma_min": config.sigma_min,
            "sigma_max": config.sigma_max,
            "sigma_step": config.sigma_step,
            "threshold_sigma": result.threshold_sigma,
            "original_formulation_reference": ORIGINAL_FORMULATION_REFERENCE,
        }
    )
    _json_dump(summary, out / "sweep_summary.json")
    return 0


def cmd_fit(config: RunConfig) -> int:
    if not config.spectrum:
        print("fit requires --spectrum <csv>", file=sys.stderr)
        return 1
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    sample = load_spectrum(config.spectrum)
    report = fit_mixture(sample, n_components=config.components)
    peak = float(np.max(sample.intensities))
    if report.converged and peak > 0 and report.residual_rms > 0.05 * peak:
        print(
            f"warning: residual rms {report.residual_rms:.4g} exceeds 5% of the peak; "
            "the model may have too few components",
            file=sys.stderr,
        )
    payload = {
        "version": __version__,
        "converged": report.converged,
        "iterations": report.iterations,
        "residual_rms": report.residual_rms,
        "resorted_input": sample.resorted,
        "components": [
            {"weight": c.weight, "center_nm": c.center_nm, "sigma_nm": c.sigma_nm}
            for c in report.spectrum.components
        ],
    }
    _json_dump(payload, out / "fit.json")
    return 0


def _write_series_csv(path: Path, header: str, columns) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")


def run_trajectory(config: RunConfig, label: str, spectrum: Spectrum) -> dict:
    """Write the requested trajectory CSVs for one spectrum; returns paths."""
    out = config.resolved_out_dir()
    out.mkdir(parents=True, exist_ok=True)
    family = DynamicsFamily(
        spectrum=spectrum,
        params=config.evolution_params(),
        s_max=config.s_max,
        step=config.step,
    )
    grid = family.grid
    ks = family.kappa_values()
    f = config.t1_fraction
    written = {}

    def fname(quantity):
        return out / f"{quantity.replace('-', '_')}_{label}.csv"

    if "kappa" in config.quantity:
        traj = kappa_trajectory(spectrum, config.evolution_params(), grid)
        write_kappa_csv(traj, fname("kappa"))
        written["kappa"] = fname("kappa")
    needs_composite = "alpha" in config.quantity or "beta" in config.quantity
    if needs_composite:
        from .dynamics import kappa_array

        k_leg1 = kappa_array(spectrum, config.lambda0, f * grid)
        k_leg2 = kappa_array(spectrum, config.lambda0, (1.0 - f) * grid)
        k_composite = k_leg1 * k_leg2
    if "alpha" in config.quantity:
        a_single = [alpha(process_from_kappa(k), certificates=False).alpha for k in ks]
        a_comp = [alpha(process_from_kappa(k), certificates=False).alpha for k in k_composite]
        _write_series_csv(fname("alpha"), "s,alpha,alpha_composed", (grid, a_single, a_comp))
        written["alpha"] = fname("alpha")
    if "beta" in config.quantity:
        b_single = [beta(process_from_kappa(k), certificates=False).beta for k in ks]
        b_comp = [beta(process_from_kappa(k), certificates=False).beta for k in k_composite]
        _write_series_csv(fname("beta"), "s,beta,beta_composed", (grid, b_single, b_comp))
        written["beta"] = fname("beta")
    if "distance" in config.quantity:
        plus = DensityMatrix.from_ket(KET_P)
        minus = DensityMatrix.from_ket(KET_M)
        from .dynamics import apply_process

        d = [
            trace_distance(
                apply_process(process_from_kappa(k), plus),
                apply_process(process_from_kappa(k), minus),
            )
            for k in ks
        ]
        _write_series_csv(fname("distance"), "s,trace_distance", (grid, d))
        written["distance"] = fname("distance")
    if "concurrence" in config.quantity or "mutual-information" in config.quantity:
        bell = DensityMatrix.from_ket(KET_PHI_PLUS)
        evolved = [apply_process_to_half(process_from_kappa(k), bell) for k in ks]
        if "concurrence" in config.quantity:
            c = [concurrence(r) for r in evolved]
            _write_series_csv(fname("concurrence"), "s,concurrence", (grid, c))
            written["concurrence"] = fname("concurrence")
        if "mutual-information" in config.quantity:
            mi = [
                von_neumann_entropy(partial_trace(r, 0))
                + von_neumann_entropy(partial_trace(r, 1))
                - von_neumann_entropy(r)
                for r in evolved
            ]
            _write_series_csv(fname("mutual_information"), "s,mutual_information", (grid, mi))
            written["mutual-information"] = fname("mutual_information")
    return written


def cmd_trajectory(config: RunConfig) -> int:
    for label, spectrum in _resolve_spectra(config):
        run_trajectory(config, label, spectrum)
    return 0


def load_config_file(path) -> dict:
    """Parse `key = value` lines; `#` starts a comment."""
    values = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DephaskitError(f"config line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


_FIELD_PARSERS = {
    "delta_n": float,
    "lambda0": float,
    "s_max": float,
    "step": float,
    "t1_fraction": float,
    "resolution": float,
    "formulation": str,
    "preset": lambda v: tuple(p.strip() for p in v.split(",") if p.strip()),
    "spectrum": str,
    "out_dir": str,
    "jobs": int,
    "center": float,
    "sigma_min": float,
    "sigma_max": float,
    "sigma_step": float,
    "components": int,
    "quantity": lambda v: tuple(q.strip() for q in v.split(",") if q.strip()),
}


def build_config(file_values: dict, flag_values: dict) -> RunConfig:
    merged = {}
    for key, value in file_values.items():
        if key not in _FIELD_PARSERS:
            raise DephaskitError(f"unknown config key {key!r}")
        merged[key] = _FIELD_PARSERS[key](value)
    for key, value in flag_values.items():
        if value is not None:
            merged[key] = value
    return RunConfig(**merged)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--delta-n", dest="delta_n", type=float)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--s-max", dest="s_max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--t1-fraction", dest="t1_fraction", type=float)
    p.add_argument("--resolution", type=float)
    p.add_argument("--formulation")
    p.add_argument("--preset", action="append", help="preset label; repeat or comma-separate")
    p.add_argument("--spectrum", help="measured spectrum CSV (wavelength_nm,intensity)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--jobs", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dephaskit",
        description="Dephasing-dynamics reconstruction and non-Markovianity classification",
    )
    parser.add_argument("--version", action="version", version=f"dephaskit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_classify = sub.add_parser("classify", help="evaluate all criteria per preset")
    _add_common_flags(p_classify)

    p_sweep = sub.add_parser("sweep-sigma", help="composite criterion vs line width")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--center", type=float, help="line center in nm (default 702.672)")
    p_sweep.add_argument("--sigma-min", dest="sigma_min", type=float)
    p_sweep.add_argument("--sigma-max", dest="sigma_max", type=float)
    p_sweep.add_argument("--sigma-step", dest="sigma_step", type=float)

    p_fit = sub.add_parser("fit", help="fit the Gaussian mixture to a spectrum CSV")
    _add_common_flags(p_fit)
    p_fit.add_argument("--components", type=int, choices=(1, 2))

    p_traj = sub.add_parser("trajectory", help="export time series for re-plotting")
    _add_common_flags(p_traj)
    p_traj.add_argument(
        "--quantity",
        action="append",
        help=f"one of {', '.join(TRAJECTORY_QUANTITIES)}; repeat or comma-separate (default all)",
    )
    return parser


_COMMANDS = {
    "classify": cmd_classify,
    "sweep-sigma": cmd_sweep_sigma,
    "fit": cmd_fit,
    "trajectory": cmd_trajectory,
}


def _split_multi(values):
    if values is None:
        return None
    out = []
    for v in values:
        out.extend(p.strip() for p in v.split(",") if p.strip())
    return tuple(out)


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    flag_values = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    flag_values["preset"] = _split_multi(flag_values.get("preset"))
    if "quantity" in flag_values:
        flag_values["quantity"] = _split_multi(flag_values.get("quantity"))
    try:
        file_values = load_config_file(args.config) if args.config else {}
        config = build_config(file_values, flag_values)
        if config.quantity and any(q not in TRAJECTORY_QUANTITIES for q in config.quantity):
            raise DephaskitError(f"quantities must be among {TRAJECTORY_QUANTITIES}")
        return _COMMANDS[args.command](config)
    except (SolverError, FitError, NonPhysicalChannelError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (DephaskitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
