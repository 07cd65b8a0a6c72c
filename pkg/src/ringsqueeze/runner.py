"""Run orchestration: assemble the physics, integrate, export, render.

A run takes a :class:`~ringsqueeze.config.RunConfig` and produces an output
directory holding, per pulse energy, the trajectory CSV, the squeezing
matrices (full and first-order) as paired re/im CSV columns, normalized
two-time correlation grids, and a diagnostics JSON; plus a sweep summary
JSON, a manifest echoing every resolved config value with its origin, and
optional PNG renders of the heatmaps and sweep curves.

Sweep points are dispatched to a process pool (one worker per energy, each
owning its run directory); rendering happens after all workers have joined
and reads only the exported files, so images can be regenerated from a
bundle without rerunning the physics. Exports contain no wall-clock values
and rendering uses fixed style settings, making identical configurations
produce identical bytes.
"""

from __future__ import annotations

import json
import logging
import multiprocessing
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import scipy

from . import algebra, fock, observables
from .config import RunConfig
from .dynamics import (TRAJECTORY_HEADER, EvolveResult, evolve, first_order)
from .ring import (CouplingTensor, KGrid, PumpSpec, ResonanceSpec,
                   build_resonance, coupling_tensor, default_grids,
                   initial_pump)

logger = logging.getLogger(__name__)

_CSV_FMT = "%.17e"
_PNG_META = {"Software": "ringsqueeze"}

# Standard certificate instance for the exact-diagonalization cross-check:
# one signal and one pump mode, constant coupling, strong coherent pump.
# Sized so the signal stays below one photon while depletion stays under 1%.
_ORACLE_LAM = 0.05
_ORACLE_BETA = 6.0
_ORACLE_CUTOFFS = (24, 95)
_ORACLE_HORIZON = 0.33 / (_ORACLE_LAM * _ORACLE_BETA)


class StageError(RuntimeError):
    """A run stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, original: BaseException | str):
        self.stage = stage
        self.original = original
        # args holds both pieces so the exception survives pickling back
        # from a worker process.
        super().__init__(stage, original)

    def __str__(self) -> str:
        return f"[{self.stage}] {self.original}"


@contextmanager
def _stage(name: str):
    """Tag any exception escaping the block with the run stage."""
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass(frozen=True)
class SystemParts:
    """Assembled physical objects for one pulse energy."""

    specs: dict[str, ResonanceSpec]
    s_grid: KGrid
    p_grid: KGrid
    pump: PumpSpec
    tensor: CouplingTensor
    beta_in: np.ndarray


def make_system(config: RunConfig, pulse_energy: float) -> SystemParts:
    """Build band specs, grids, pump state and coupling tensor from a config."""
    specs = {label: build_resonance(label, band.omega, band.group_velocity,
                                    band.q_intrinsic, band.q_loaded)
             for label, band in config.bands.items()}
    pump = PumpSpec(cw_power=config.cw_power, pulse_energy=pulse_energy,
                    duration=config.pulse_duration, omega_p=specs["P"].omega)
    s_grid, p_grid = default_grids(
        specs["S"], specs["P"], pump, n_s=config.n_s, n_p=config.n_p,
        s_span_linewidths=config.s_span_linewidths,
        p_span_pulse_factor=config.p_span_pulse_widths)
    tensor = coupling_tensor(specs["S"], specs["P"], specs["C"],
                             s_grid, p_grid, pump, config.gamma_nl,
                             config.radius)
    beta_in = initial_pump(pump, p_grid, specs["P"].v)
    return SystemParts(specs, s_grid, p_grid, pump, tensor, beta_in)


@dataclass
class PointResult:
    """Everything computed at one pulse energy, before export."""

    pulse_energy: float
    full: EvolveResult | None
    w_first: np.ndarray | None
    j_full: np.ndarray | None
    j_first: np.ndarray | None
    g2_full: observables.G2Grid | None
    g2_first: observables.G2Grid | None
    record: dict
    diagnostics: dict
    axis_dwell: np.ndarray      # (k - K_S) v_S / Gamma_bar_S, actual channel


def run_point(config: RunConfig, pulse_energy: float) -> PointResult:
    """Solve one pulse energy in the configured mode and reduce to exports."""
    with _stage("assemble"):
        parts = make_system(config, pulse_energy)
    tensor = parts.tensor
    do_full = config.mode in ("full", "both")
    do_first = config.mode in ("first", "both")

    full = None
    if do_full:
        with _stage("evolve"):
            full = evolve(tensor, parts.beta_in,
                          t_start=config.window_start, t_end=config.window_end,
                          step_divisor=config.step_divisor,
                          sample_stride=config.sample_stride,
                          tail_tolerance=config.tail_tolerance,
                          max_extensions=config.max_extensions)
    w_first = None
    if do_first:
        with _stage("first-order"):
            # Share the (possibly extended) window so the two solutions
            # integrate over identical support.
            if full is not None:
                w0, w1 = full.window
            else:
                w0, w1 = config.window_start, config.window_end
            w_first = first_order(tensor, parts.beta_in, t_start=w0, t_end=w1)

    j_full = j_first = None
    g2_full = g2_first = None
    n_full = n_first = None
    k_full = k_first = None
    gap_db = None
    q_residual = None
    diagnostics: dict = {
        "U_P_pJ": pulse_energy * 1e12,
        "pump_photons_initial": float(np.sum(np.abs(parts.beta_in) ** 2)),
    }

    with _stage("decompose"):
        if full is not None:
            state = full.state
            parts_polar = algebra.polar_decompose(state.v)
            decomp = algebra.extract_j(state.v, state.w,
                                       weighting=config.schmidt_weighting,
                                       parts=parts_polar)
            j_full = decomp.j
            r_full = parts_polar.r
            n_full = observables.photon_number(state.w)
            k_full = observables.schmidt_number_from_values(
                r_full, config.schmidt_weighting)
            q_residual = full.max_q_drift
            actual, phantom = observables.channel_photon_numbers(state.w, tensor)
            diagnostics.update({
                "window_s": list(full.window),
                "step_s": full.step,
                "n_steps": full.n_steps,
                "extensions": full.extended,
                "zeta_tail_fraction": full.zeta_tail_fraction,
                "max_sympl_res": full.max_sympl_res,
                "max_symm_res": full.max_symm_res,
                "max_q_drift": full.max_q_drift,
                "theta_a_rad": full.theta_a,
                "theta_b_rad": state.theta_b,
                "photons_actual": actual,
                "photons_phantom": phantom,
                "pump_photons_final": state.pump_photons,
                "squeeze_r_top": _top(r_full),
            })
        if w_first is not None:
            j_first = 0.5 * (w_first + w_first.T)  # roundoff symmetrization
            decomp_first = algebra.squeeze_decomp_from_j(
                j_first, config.schmidt_weighting)
            n_first = observables.photon_number(w_first)
            k_first = decomp_first.schmidt_number
            diagnostics["takagi_first_top"] = _top(decomp_first.takagi_values)
        if n_full is not None and n_first is not None:
            gap_db = observables.first_order_gap_db(n_full, n_first)

    with _stage("observables"):
        times = observables.default_g2_times(
            tensor.gamma_bar_s, config.g2_points, config.g2_span_dwells)
        if full is not None:
            moments = observables.moment_matrices(full.state.v, full.state.w,
                                                  tensor)
            g2_full = observables.g2(moments, times, tensor.tau_pump)
        if w_first is not None:
            # Correlations are expectations in the state, so promote J to
            # the physical squeezed ket it generates: the rebuilt pair obeys
            # the Bogoliubov constraints, which the raw (1, J) pair violates
            # at second order in the squeeze parameters.
            v1, w1 = algebra.rebuild_bogoliubov(decomp_first,
                                                np.zeros_like(j_first))
            moments = observables.moment_matrices(v1, w1, tensor)
            g2_first = observables.g2(moments, times, tensor.tau_pump)

    record = {
        "U_P_pJ": pulse_energy * 1e12,
        "n_full": n_full,
        "n_first": n_first,
        "gap_dB": gap_db,
        "K_full": k_full,
        "K_first": k_first,
        "Q_residual": q_residual,
    }
    axis = tensor.s_grid_det * tensor.v_s / tensor.gamma_bar_s
    return PointResult(pulse_energy, full, w_first, j_full, j_first,
                       g2_full, g2_first, record, diagnostics, axis)


def _top(values: np.ndarray, n: int = 12) -> list[float]:
    ordered = np.sort(np.asarray(values, dtype=float))[::-1]
    return [float(x) for x in ordered[:n]]


def _run_dir_name(pulse_energy: float) -> str:
    return f"run_{pulse_energy * 1e12:g}pJ"


def write_complex_csv(path: str, matrix: np.ndarray) -> None:
    """Write a complex matrix as interleaved re/im column pairs."""
    m = np.asarray(matrix)
    flat = np.empty((m.shape[0], 2 * m.shape[1]))
    flat[:, 0::2] = m.real
    flat[:, 1::2] = m.imag
    np.savetxt(path, flat, fmt=_CSV_FMT, delimiter=",",
               header=f"complex matrix {m.shape[0]}x{m.shape[1]}, "
                      "columns interleaved re,im")


def read_complex_csv(path: str) -> np.ndarray:
    """Inverse of :func:`write_complex_csv`."""
    flat = np.atleast_2d(np.loadtxt(path, delimiter=",", comments="#"))
    return flat[:, 0::2] + 1j * flat[:, 1::2]


def _write_g2_csv(path: str, grid: observables.G2Grid,
                  gamma_bar_s: float) -> None:
    """G2 values framed by their time grids (first row and column, t*Gamma)."""
    n = grid.times.size
    framed = np.zeros((n + 1, n + 1))
    framed[0, 1:] = grid.times * gamma_bar_s
    framed[1:, 0] = grid.times * gamma_bar_s
    framed[1:, 1:] = grid.values
    np.savetxt(path, framed, fmt=_CSV_FMT, delimiter=",",
               header="normalized G2; first row/column: t * Gamma_bar_S")


def _json_dump(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_point_outputs(run_dir: str, config: RunConfig,
                        point: PointResult) -> list[str]:
    """Export one energy point into its own directory; returns file names."""
    os.makedirs(run_dir, exist_ok=True)
    written: list[str] = []

    def path(name: str) -> str:
        written.append(name)
        return os.path.join(run_dir, name)

    if point.full is not None:
        rows = point.full.trajectory_rows()
        np.savetxt(path("trajectory.csv"), rows, fmt=_CSV_FMT, delimiter=",",
                   header=",".join(TRAJECTORY_HEADER), comments="")
    if point.j_full is not None:
        write_complex_csv(path("j_full.csv"), point.j_full)
    if point.j_first is not None:
        write_complex_csv(path("j_first.csv"), point.j_first)
    np.savetxt(path("axis.csv"), point.axis_dwell, fmt=_CSV_FMT, delimiter=",",
               header="(k - K_S) v_S / Gamma_bar_S, actual channel")
    for grid, name in ((point.g2_full, "g2_full.csv"),
                       (point.g2_first, "g2_first.csv")):
        if grid is not None:
            # The grid spans g2_span_dwells dwell times, so the last sample
            # recovers Gamma_bar_S for the normalized time axis.
            _write_g2_csv(path(name), grid,
                          config.g2_span_dwells / grid.times[-1])
    _json_dump(path("diagnostics.json"), point.diagnostics)
    return written


def _point_worker(payload: tuple[RunConfig, float, str]) -> tuple[dict, dict]:
    """Worker body: solve one energy and write its directory."""
    config, energy, out_dir = payload
    point = run_point(config, energy)
    run_dir = os.path.join(out_dir, _run_dir_name(energy))
    with _stage("export"):
        files = write_point_outputs(run_dir, config, point)
    run_info = {
        "U_P_pJ": energy * 1e12,
        "directory": _run_dir_name(energy),
        "files": files,
    }
    for key in ("window_s", "step_s", "n_steps", "extensions",
                "max_sympl_res", "max_symm_res", "max_q_drift",
                "zeta_tail_fraction"):
        if key in point.diagnostics:
            run_info[key] = point.diagnostics[key]
    return point.record, run_info


def _manifest_skeleton(config: RunConfig) -> dict:
    resolved = {f"{e.section}.{e.key}": {"value": e.value, "source": e.source}
                for e in config.entries}
    return {
        "package": {"name": "ringsqueeze", "version": _package_version()},
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "config": resolved,
        "mode": config.mode,
        "pulse_energies_pJ": [e * 1e12 for e in config.pulse_energies],
        "runs": [],
        "partial": False,
    }


def _package_version() -> str:
    from . import __version__
    return __version__


def run(config: RunConfig, threads: int = 1) -> dict:
    """Execute a full run: solve every energy, export, summarize, render.

    Returns a bundle description: the output directory plus the paths of
    the manifest, summary and any rendered images. On a failure after some
    points completed, the manifest is still written with ``partial`` set to
    the failing stage before the error propagates.
    """
    out_dir = config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    manifest = _manifest_skeleton(config)
    manifest_path = os.path.join(out_dir, "manifest.json")

    if config.mode == "fock":
        with _stage("fock-oracle"):
            fock_config = fock.FockConfig(
                lam=np.full((1, 1, 1), _ORACLE_LAM),
                cutoffs_a=(_ORACLE_CUTOFFS[0],),
                cutoffs_b=(_ORACLE_CUTOFFS[1],),
                beta0=(_ORACLE_BETA,))
            report = fock.oracle_report(fock_config, _ORACLE_HORIZON)
            report_path = os.path.join(out_dir, "fock_report.json")
            _json_dump(report_path, report)
        manifest["fock_report"] = "fock_report.json"
        _json_dump(manifest_path, manifest)
        return {"out_dir": out_dir, "manifest": manifest_path,
                "fock_report": report_path}

    energies = config.pulse_energies
    payloads = [(config, energy, out_dir) for energy in energies]
    records: list[dict] = []
    try:
        if threads > 1 and len(energies) > 1:
            # One single-threaded worker per energy; spawn keeps BLAS pools
            # from being shared across forks.
            os.environ.setdefault("OMP_NUM_THREADS", "1")
            os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
            context = multiprocessing.get_context("spawn")
            with ProcessPoolExecutor(max_workers=threads,
                                     mp_context=context) as pool:
                for record, run_info in pool.map(_point_worker, payloads):
                    records.append(record)
                    manifest["runs"].append(run_info)
                    logger.info("completed %s", run_info["directory"])
        else:
            for payload in payloads:
                record, run_info = _point_worker(payload)
                records.append(record)
                manifest["runs"].append(run_info)
                logger.info("completed %s", run_info["directory"])
    except BaseException as exc:
        stage = exc.stage if isinstance(exc, StageError) else "solve"
        manifest["partial"] = {
            "failed_stage": stage,
            "completed": [r["directory"] for r in manifest["runs"]],
        }
        _json_dump(manifest_path, manifest)
        raise

    _accumulate_residuals(manifest)
    summary_path = os.path.join(out_dir, "summary.json")
    with _stage("export"):
        _json_dump(summary_path, records)
        _json_dump(manifest_path, manifest)

    images: list[str] = []
    if config.render:
        with _stage("render"):
            images = render_bundle(out_dir)
            manifest["images"] = [os.path.relpath(p, out_dir) for p in images]
            _json_dump(manifest_path, manifest)

    return {"out_dir": out_dir, "manifest": manifest_path,
            "summary": summary_path, "records": records, "images": images}


def _accumulate_residuals(manifest: dict) -> None:
    keys = ("max_sympl_res", "max_symm_res", "max_q_drift")
    maxima = {}
    for key in keys:
        values = [r[key] for r in manifest["runs"] if key in r]
        if values:
            maxima[key] = max(values)
    if maxima:
        manifest["invariant_residual_maxima"] = maxima


def _load_g2_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    framed = np.loadtxt(path, delimiter=",", comments="#")
    return framed[0, 1:], framed[1:, 1:]


def render_bundle(out_dir: str) -> list[str]:
    """Draw heatmaps and sweep curves from a bundle's exported files.

    Reads only the CSV/JSON artifacts, so a bundle can be re-rendered
    without recomputing. Raises FileNotFoundError naming any missing input.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    images: list[str] = []
    run_dirs = sorted(
        (d for d in os.listdir(out_dir)
         if d.startswith("run_") and os.path.isdir(os.path.join(out_dir, d))),
        key=lambda d: float(d[4:].rstrip("pJ")))

    for name in run_dirs:
        run_dir = os.path.join(out_dir, name)
        axis_path = os.path.join(run_dir, "axis.csv")
        if not os.path.isfile(axis_path):
            raise FileNotFoundError(f"missing input CSV: {axis_path}")
        axis = np.loadtxt(axis_path, delimiter=",", comments="#")
        n_s = axis.size

        for stem, label in (("j_full", "full"), ("j_first", "first order")):
            csv_path = os.path.join(run_dir, f"{stem}.csv")
            if not os.path.isfile(csv_path):
                continue
            j = read_complex_csv(csv_path)
            block = np.abs(j[:n_s, :n_s])
            fig, ax = plt.subplots(figsize=(4.6, 4.0))
            extent = (axis[0], axis[-1], axis[0], axis[-1])
            im = ax.imshow(block, origin="lower", extent=extent,
                           cmap="viridis", aspect="equal")
            ax.set_xlim(-3.0, 3.0)
            ax.set_ylim(-3.0, 3.0)
            ax.set_xlabel(r"$(k - K_S)\,v_S/\bar\Gamma_S$")
            ax.set_ylabel(r"$(k' - K_S)\,v_S/\bar\Gamma_S$")
            ax.set_title(f"|J|, {label}")
            fig.colorbar(im, ax=ax, shrink=0.85)
            out_path = os.path.join(run_dir, f"{stem}.png")
            fig.savefig(out_path, dpi=150, bbox_inches="tight",
                        metadata=_PNG_META)
            plt.close(fig)
            images.append(out_path)

        for stem, label in (("g2_full", "full"), ("g2_first", "first order")):
            csv_path = os.path.join(run_dir, f"{stem}.csv")
            if not os.path.isfile(csv_path):
                continue
            t_dwell, values = _load_g2_csv(csv_path)
            fig, ax = plt.subplots(figsize=(4.6, 4.0))
            extent = (t_dwell[0], t_dwell[-1], t_dwell[0], t_dwell[-1])
            im = ax.imshow(values, origin="lower", extent=extent,
                           cmap="inferno", aspect="equal")
            ax.set_xlabel(r"$t_1\,\bar\Gamma_S$")
            ax.set_ylabel(r"$t_2\,\bar\Gamma_S$")
            ax.set_title(f"normalized $G^{{(2)}}$, {label}")
            fig.colorbar(im, ax=ax, shrink=0.85)
            out_path = os.path.join(run_dir, f"{stem}.png")
            fig.savefig(out_path, dpi=150, bbox_inches="tight",
                        metadata=_PNG_META)
            plt.close(fig)
            images.append(out_path)

    summary_path = os.path.join(out_dir, "summary.json")
    if os.path.isfile(summary_path):
        with open(summary_path, "r", encoding="utf-8") as handle:
            records = json.load(handle)
        if len(records) > 1:
            images.extend(_render_sweep(out_dir, records, plt))
    return images


def _render_sweep(out_dir: str, records: list[dict], plt) -> list[str]:
    energies = [r["U_P_pJ"] for r in records]
    images = []

    def series(key):
        vals = [r[key] for r in records]
        return None if any(v is None for v in vals) else vals

    pairs = [("n_full", "n_first", "photons.png", "signal photons", "loglog"),
             ("K_full", "K_first", "schmidt.png", "Schmidt number", "semilogx")]
    for full_key, first_key, name, ylabel, scale in pairs:
        full_vals, first_vals = series(full_key), series(first_key)
        if full_vals is None and first_vals is None:
            continue
        fig, ax = plt.subplots(figsize=(4.8, 3.6))
        plot = ax.loglog if scale == "loglog" else ax.semilogx
        if full_vals is not None:
            plot(energies, full_vals, "o-", label="full")
        if first_vals is not None:
            plot(energies, first_vals, "s--", label="first order")
        ax.set_xlabel(r"$U_P$ [pJ]")
        ax.set_ylabel(ylabel)
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        out_path = os.path.join(out_dir, name)
        fig.savefig(out_path, dpi=150, bbox_inches="tight", metadata=_PNG_META)
        plt.close(fig)
        images.append(out_path)
    return images
