"""Link-experiment pipelines: storage-time scans and mode-count scans.

Each storage-time point runs the sampled write/herald/readout pipeline to
tally a PmnTable, measures the fringe visibility by fitting a sinusoid to
Poisson-sampled fringe counts, and combines both into the concurrence. The
mode-count scan repeats the heralding stage for every N and reports the
multiplexed detection probability alongside the concurrence.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import NoHeraldsError, ParameterError
from .fitters import FitResult, Samples, fit_sinusoid
from .link_physics import LinkParams, LinkTally, fringe_expectation, run_link_trials
from .metrics import (
    CountsRecord,
    bootstrap_concurrence_stderr,
    concurrence,
    intrinsic_efficiency,
)
from .metrics import visibility as raw_visibility
from .streams import substream

__all__ = [
    "StorageTimePoint",
    "ModeCountPoint",
    "counts_record",
    "fringe_counts",
    "measure_visibility",
    "storage_time_scan",
    "mode_count_scan",
]

DEFAULT_PHASES = 12
DEFAULT_SHOTS_PER_PHASE = 4000


@dataclass(frozen=True)
class StorageTimePoint:
    storage_time: float
    concurrence: float
    concurrence_stderr: float
    visibility: float
    visibility_stderr: float
    efficiency: float
    heralded: int
    trains: int

    def as_row(self) -> dict:
        return {
            "storage_time_us": self.storage_time * 1e6,
            "C": self.concurrence,
            "C_stderr": self.concurrence_stderr,
            "V": self.visibility,
            "eta": self.efficiency,
        }


@dataclass(frozen=True)
class ModeCountPoint:
    mode_count: int
    detection_probability: float
    detection_stderr: float
    concurrence: float
    concurrence_stderr: float
    heralded: int
    trains: int

    def as_row(self) -> dict:
        return {
            "mode_count": self.mode_count,
            "P_D": self.detection_probability,
            "C": self.concurrence,
        }


def counts_record(tally: LinkTally) -> CountsRecord:
    """Repackage a LinkTally as the estimator-facing CountsRecord."""
    return CountsRecord(
        stokes_window_counts=tally.window_counts.copy(),
        anti_stokes_counts=tally.pmn_counts.copy(),
        trains=tally.trains,
        heralded=tally.heralded,
        storage_time=tally.storage_time,
    )


def fringe_counts(params: LinkParams, storage_time: float, seed,
                  phases: int = DEFAULT_PHASES,
                  shots_per_phase: int = DEFAULT_SHOTS_PER_PHASE) -> Samples:
    """Poisson-sampled coincidence counts across one fringe period.

    Each phase point accumulates ``shots_per_phase`` heralded readouts; the
    expected count is shots * fringe_expectation(theta).
    """
    if phases < 4:
        raise ParameterError(f"a fringe scan needs >= 4 phases, got {phases}")
    rng = substream(seed, 0) if isinstance(seed, int) else seed
    theta = np.linspace(0.0, 2.0 * np.pi, phases, endpoint=False)
    expected = shots_per_phase * fringe_expectation(theta, storage_time, params)
    counts = rng.poisson(expected).astype(float)
    return Samples.from_xy(theta, counts)


def measure_visibility(params: LinkParams, storage_time: float, seed,
                       phases: int = DEFAULT_PHASES,
                       shots_per_phase: int = DEFAULT_SHOTS_PER_PHASE,
                       raw_bins: bool = False,
                       ) -> tuple[float, float, FitResult | None]:
    """Measure the fringe visibility from sampled counts.

    By default the visibility comes from the fitted sinusoid's extrema, which
    shot noise cannot bias the way raw max/min bins can (the raw estimator
    picks the most upward-fluctuated bin as the maximum). ``raw_bins=True``
    selects the plain (max-min)/(max+min) of the binned counts instead; its
    stderr is a Poisson propagation and no fit result is returned.
    """
    samples = fringe_counts(params, storage_time, seed, phases, shots_per_phase)
    if raw_bins:
        top, bottom = float(samples.y.max()), float(samples.y.min())
        value = raw_visibility(top, bottom)
        # d(V)/d(max), d(V)/d(min) with independent Poisson extrema
        total = top + bottom
        stderr = (2.0 / total ** 2) * np.sqrt(bottom ** 2 * max(top, 1.0)
                                              + top ** 2 * max(bottom, 1.0))
        return value, float(stderr), None
    fit = fit_sinusoid(samples)
    return fit.params["visibility"], fit.stderr["visibility"], fit


def _point(params: LinkParams, storage_time: float, trains: int, seed_root: int,
           stream: int, phases: int, shots_per_phase: int):
    tally = run_link_trials(params, storage_time, trains, substream(seed_root, stream, 0))
    if tally.heralded == 0:
        return tally, None, 0.0, float("inf")
    vis, vis_err, _ = measure_visibility(
        params, storage_time, substream(seed_root, stream, 1), phases, shots_per_phase)
    result = concurrence(tally.pmn(), vis)
    stderr = bootstrap_concurrence_stderr(
        tally.pmn_counts.reshape(4), vis,
        substream(seed_root, stream, 2), visibility_stderr=vis_err)
    return tally, dataclasses.replace(result, stderr=stderr), vis, vis_err


def storage_time_scan(params: LinkParams, storage_times, trains: int, seed: int,
                      phases: int = DEFAULT_PHASES,
                      shots_per_phase: int = DEFAULT_SHOTS_PER_PHASE,
                      ) -> list[StorageTimePoint]:
    """Run the full pipeline at each storage time. ``trains`` applies per point."""
    points = []
    for index, t in enumerate(storage_times):
        tally, result, vis, vis_err = _point(
            params, float(t), trains, seed, index, phases, shots_per_phase)
        if result is None:
            raise NoHeraldsError(
                f"no heralds collected at storage_time={t}: increase trains ({trains})")
        eta = intrinsic_efficiency(counts_record(tally), tally.pmn(), params.detection_eff)
        points.append(StorageTimePoint(
            storage_time=float(t),
            concurrence=result.concurrence,
            concurrence_stderr=result.stderr,
            visibility=vis,
            visibility_stderr=vis_err,
            efficiency=eta,
            heralded=tally.heralded,
            trains=tally.trains,
        ))
    return points


def mode_count_scan(params: LinkParams, mode_counts, storage_time: float,
                    window_budget: int, seed: int,
                    phases: int = DEFAULT_PHASES,
                    shots_per_phase: int = DEFAULT_SHOTS_PER_PHASE,
                    ) -> list[ModeCountPoint]:
    """Scan the number of multiplexed modes at a fixed storage time.

    ``window_budget`` is the total number of (train x window) slots sampled at
    each N, so every point costs the same and the small-N points get enough
    trains to accumulate heralds.
    """
    points = []
    for index, n in enumerate(mode_counts):
        n = int(n)
        scan_params = dataclasses.replace(
            params, mode_count=n,
            train_duration=max(params.train_duration, params.pulse_interval * n))
        trains = max(1, window_budget // n)
        tally, result, vis, vis_err = _point(
            scan_params, storage_time, trains, seed, 1000 + index, phases, shots_per_phase)
        p_d = tally.detection_probability
        # clicks across windows are nearly independent Bernoullis at these rates
        stderr = float(np.sqrt(max(p_d, 1.0 / tally.trains) / tally.trains))
        points.append(ModeCountPoint(
            mode_count=n,
            detection_probability=p_d,
            detection_stderr=stderr,
            concurrence=result.concurrence if result else 0.0,
            concurrence_stderr=result.stderr if result else float("inf"),
            heralded=tally.heralded,
            trains=tally.trains,
        ))
    return points
