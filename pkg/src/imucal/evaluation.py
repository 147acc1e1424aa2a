"""Orientation-count study: how calibration quality degrades with fewer poses.

Each sequence is calibrated at full length; the element-wise mean of those
results is the reference.  Every sequence is then cut after its ``n``-th
static segment, recalibrated, and compared to the reference per
coefficient group.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .calibration import CalibrationResult, calibrate
from .errors import ImucalError
from .model import MILLI_G, AccelParams, CalibrationParams, GyroParams
from .solver import SolverConfig
from .static_detector import DetectorConfig
from .stream import SampleStream

SUBSETS = (
    ("accel_bias", "mg"),
    ("accel_scale", "%"),
    ("accel_misalignment", "deg"),
    ("gyro_scale", "%"),
    ("gyro_misalignment", "deg"),
)
UNITS = dict(SUBSETS)


def mg_to_ms2(value):
    return np.asarray(value, dtype=float) * MILLI_G


def ms2_to_mg(value):
    return np.asarray(value, dtype=float) / MILLI_G


def reference_params(runs) -> CalibrationParams:
    """Element-wise mean of the optimized parameters and gyro biases."""
    params = [r.params if isinstance(r, CalibrationResult) else r for r in runs]
    if not params:
        raise ValueError("reference needs at least one calibration run")
    vec = np.mean([p.optimized_vector() for p in params], axis=0)
    bias = np.mean([p.gyro.bias for p in params], axis=0)
    return CalibrationParams(AccelParams.from_vector(vec[:9]), GyroParams.from_vector(vec[9:], bias))


def subset_errors(p: CalibrationParams, ref: CalibrationParams) -> dict[str, float]:
    """Mean absolute difference per coefficient group, in reporting units."""
    return {
        "accel_bias": float(np.mean(np.abs(ms2_to_mg(p.accel.bias - ref.accel.bias)))),
        "accel_scale": float(np.mean(100.0 * np.abs(p.accel.scale - ref.accel.scale) / ref.accel.scale)),
        "accel_misalignment": float(np.mean(np.abs(np.degrees(p.accel.misalignment - ref.accel.misalignment)))),
        "gyro_scale": float(np.mean(100.0 * np.abs(p.gyro.scale - ref.gyro.scale) / ref.gyro.scale)),
        "gyro_misalignment": float(np.mean(np.abs(np.degrees(p.gyro.misalignment - ref.gyro.misalignment)))),
    }


@dataclass
class EvalReport:
    n_values: list
    # (n_eff, run_id) -> {subset: value}
    cells: dict = field(default_factory=dict)
    # (n_eff, run_id) -> error code of the failed calibration
    missing: dict = field(default_factory=dict)
    reference: CalibrationParams | None = None

    def rows(self) -> list[tuple]:
        out = []
        for (n, run), errs in sorted(self.cells.items()):
            for name, unit in SUBSETS:
                out.append((n, run, name, errs[name], unit))
        return out

    def mean(self, n_eff: int, subset: str) -> float:
        vals = [e[subset] for (n, _), e in self.cells.items() if n == n_eff]
        return float(np.mean(vals)) if vals else float("nan")

    def aggregate(self) -> dict:
        return {n: {s: self.mean(n, s) for s, _ in SUBSETS} for n in self.n_values}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n_eff", "run_id", "subset", "value", "unit"])
        for n, run, name, value, unit in self.rows():
            w.writerow([n, run, name, f"{value:.9g}", unit])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "rows": [
                {"n_eff": n, "run_id": r, "subset": s, "value": float(f"{v:.9g}"), "unit": u}
                for n, r, s, v, u in self.rows()
            ],
            "mean": {str(n): {s: float(f"{v:.9g}") for s, v in d.items()} for n, d in self.aggregate().items()},
            "missing": [{"n_eff": n, "run_id": r, "error": code} for (n, r), code in sorted(self.missing.items())],
        }
        return json.dumps(doc, indent=2) + "\n"


def truncate_after_segment(stream: SampleStream, segments: list, n_eff: int, config: DetectorConfig) -> SampleStream:
    """Cut the stream one detector window after the end of segment ``n_eff``."""
    if n_eff >= len(segments):
        return stream
    half = config.half_samples(stream.sample_rate)
    cut = min(len(stream), segments[n_eff - 1].end + 2 * half + 1)
    return stream.slice(0, cut)


def truncation_sweep(
    sequences: list[SampleStream],
    n_values: list[int],
    detector_cfg: DetectorConfig | None = None,
    solver_cfg: SolverConfig | None = None,
    accel_source: str = "primary",
) -> EvalReport:
    detector_cfg = detector_cfg or DetectorConfig()
    solver_cfg = solver_cfg or SolverConfig()
    n_values = sorted(set(int(n) for n in n_values))
    full = [calibrate(s, detector_cfg, solver_cfg, accel_source) for s in sequences]
    ref = reference_params(full)
    report = EvalReport(n_values, reference=ref)
    for run, (stream, base) in enumerate(zip(sequences, full)):
        for n in n_values:
            if n > base.segments_used:
                report.missing[(n, run)] = "too-few-poses"
                continue
            if n == base.segments_used:
                result = base
            else:
                cut = truncate_after_segment(stream, base.segments, n, detector_cfg)
                try:
                    result = calibrate(cut, detector_cfg, solver_cfg, accel_source)
                except ImucalError as exc:
                    report.missing[(n, run)] = exc.code
                    continue
            report.cells[(n, run)] = subset_errors(result.params, ref)
    return report
