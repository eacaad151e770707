"""
Stream record files and the merged replay queue.

    imu.csv     t,link_id,fx,fy,fz,wx,wy,wz    one row per link per epoch
    slam.csv    t,px,py,pz,sigma               camera position fixes
    mocap.csv   t,px,py,pz,sigma
    truth.npz   epoch times, true state vectors, body rates, stationarity, chain JSON

Floats are written with 17 significant digits so files re-ingest bit-exactly.
"""

from __future__ import annotations

import csv
import heapq
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from core.body.model import ChainModel
from core.exceptions import (
    EmptyStreamError,
    StreamParseError,
    TimestampRegressionError,
    UnknownLinkError,
)
from core.ins.propagation import ImuEpoch, ImuLog
from core.measurements.types import PositionFix
from core.simulator.sensors import Scenario
from core.simulator.trajectory import GroundTruth

logger = logging.getLogger(__name__)

IMU_HEADER = ["t", "link_id", "fx", "fy", "fz", "wx", "wy", "wz"]
FIX_HEADER = ["t", "px", "py", "pz", "sigma"]

IMU_FILE = "imu.csv"
SLAM_FILE = "slam.csv"
MOCAP_FILE = "mocap.csv"
TRUTH_FILE = "truth.npz"
CHAIN_FILE = "chain.json"


def fmt(x: float) -> str:
    return f"{x:.17g}"


# ── Writers ──────────────────────────────────────────────────

def write_imu(path: str | Path, log: ImuLog) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(IMU_HEADER)
        for s in log.samples():
            writer.writerow([fmt(s.t), s.link_id, *map(fmt, s.f_raw), *map(fmt, s.w_raw)])
    return path


def write_fixes(path: str | Path, fixes: list[PositionFix]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIX_HEADER)
        for fix in fixes:
            writer.writerow([fmt(fix.t), *map(fmt, fix.p_c_meas), fmt(fix.sigma)])
    return path


def save_truth(path: str | Path, gt: GroundTruth) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(
        path,
        t=gt.t,
        states=gt.states,
        w_body=gt.w_body,
        stationary=gt.stationary,
        chain=np.array(gt.model.to_json()),
    )
    return path


def load_truth(path: str | Path) -> GroundTruth:
    with np.load(Path(path), allow_pickle=False) as data:
        model = ChainModel.from_json(str(data["chain"]))
        return GroundTruth(
            model=model,
            t=data["t"].copy(),
            states=data["states"].copy(),
            w_body=data["w_body"].copy(),
            stationary=data["stationary"].copy(),
        )


def write_scenario(out_dir: str | Path, scenario: Scenario) -> dict[str, Path]:
    """Write every stream of a simulated scenario plus truth and chain model."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "imu": write_imu(out / IMU_FILE, scenario.imu),
        "slam": write_fixes(out / SLAM_FILE, scenario.slam),
        "mocap": write_fixes(out / MOCAP_FILE, scenario.mocap),
        "truth": save_truth(out / TRUTH_FILE, scenario.truth),
    }
    chain = out / CHAIN_FILE
    chain.write_text(scenario.truth.model.to_json(), encoding="utf-8")
    paths["chain"] = chain
    logger.info(f"Wrote scenario files to {out}")
    return paths


# ── Readers ──────────────────────────────────────────────────

def _rows(path: Path, width: int) -> Iterator[tuple[int, list[float]]]:
    """Numeric rows with their 1-based line numbers; blank, comment and header lines skipped."""
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip() == "t":
                continue
            if len(row) != width:
                raise StreamParseError(str(path), lineno, f"expected {width} fields, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError as e:
                raise StreamParseError(str(path), lineno, str(e)) from e
            if not all(np.isfinite(values)):
                raise StreamParseError(str(path), lineno, "non-finite value")
            yield lineno, values


def read_imu(path: str | Path, n_links: int) -> ImuLog:
    """Parse an IMU file into a synchronized log; every epoch must carry every link once."""
    path = Path(path)
    times: list[float] = []
    f_rows: list[np.ndarray] = []
    w_rows: list[np.ndarray] = []
    current: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    t_cur: Optional[float] = None
    start_line = 0

    def close_epoch(lineno: int) -> None:
        if len(current) != n_links:
            missing = sorted(set(range(n_links)) - set(current))
            raise StreamParseError(str(path), lineno, f"epoch t={t_cur} lacks links {missing}")
        times.append(t_cur)
        f_rows.append(np.array([current[k][0] for k in range(n_links)]))
        w_rows.append(np.array([current[k][1] for k in range(n_links)]))
        current.clear()

    for lineno, values in _rows(path, len(IMU_HEADER)):
        t, link = values[0], values[1]
        if link != int(link):
            raise StreamParseError(str(path), lineno, f"link id {link} is not an integer")
        link = int(link)
        if not 0 <= link < n_links:
            raise UnknownLinkError(link)
        if t_cur is not None and t < t_cur:
            raise TimestampRegressionError(path.name, t_cur, t)
        if t_cur is not None and t > t_cur:
            close_epoch(start_line)
        if t_cur is None or t > t_cur:
            t_cur, start_line = t, lineno
        if link in current:
            raise StreamParseError(str(path), lineno, f"duplicate sample for link {link} at t={t}")
        current[link] = (np.array(values[2:5]), np.array(values[5:8]))

    if t_cur is None:
        raise EmptyStreamError(path.name)
    close_epoch(start_line)
    return ImuLog(t=np.array(times), f_raw=np.stack(f_rows), w_raw=np.stack(w_rows))


def read_fixes(path: str | Path) -> list[PositionFix]:
    """Parse a position-fix file; an empty file is a valid (empty) stream."""
    path = Path(path)
    fixes: list[PositionFix] = []
    for lineno, values in _rows(path, len(FIX_HEADER)):
        t, sigma = values[0], values[4]
        if fixes and t < fixes[-1].t:
            raise TimestampRegressionError(path.name, fixes[-1].t, t)
        if sigma <= 0.0:
            raise StreamParseError(str(path), lineno, f"sigma must be positive, got {sigma}")
        fixes.append(PositionFix(t=t, p_c_meas=np.array(values[1:4]), sigma=sigma))
    return fixes


# ── Replay queue ─────────────────────────────────────────────

class StreamKind(str, Enum):
    IMU = "imu"
    FIX = "fix"


@dataclass(frozen=True)
class StreamEvent:
    t: float
    kind: StreamKind
    index: int  # epoch index for IMU events, fix index otherwise


@dataclass
class EventQueue:
    """Time-ordered merge of the IMU log and one position-fix stream."""
    imu: ImuLog
    fixes: list[PositionFix] = field(default_factory=list)
    events: list[StreamEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def epochs(self) -> Iterator[tuple[int, ImuEpoch, list[PositionFix]]]:
        """
        Walk the IMU epochs with the fixes whose nearest epoch is each one.
        Fixes more than half a sample outside the IMU span are dropped.
        """
        t = self.imu.t
        n = t.shape[0]
        half = 0.5 * (float(np.median(np.diff(t))) if n > 1 else 0.0)
        pending: dict[int, list[PositionFix]] = {}
        dropped = 0
        for ev in self.events:
            if ev.kind != StreamKind.FIX:
                continue
            fix = self.fixes[ev.index]
            k = int(np.searchsorted(t, fix.t))
            if k > 0 and (k == n or fix.t - t[k - 1] <= t[k] - fix.t):
                k -= 1
            if abs(fix.t - t[k]) > half + 1e-12:
                dropped += 1
                continue
            pending.setdefault(k, []).append(fix)
        if dropped:
            logger.warning(f"Dropped {dropped} fixes outside the IMU time span")
        for k in range(n):
            yield k, self.imu.epoch(k), pending.get(k, [])


def build_event_queue(imu: ImuLog, fixes: list[PositionFix] | None = None) -> EventQueue:
    """Merge streams by time; at equal stamps IMU events come first."""
    fixes = fixes or []
    imu_events = (StreamEvent(float(t), StreamKind.IMU, k) for k, t in enumerate(imu.t))
    fix_events = (StreamEvent(f.t, StreamKind.FIX, i) for i, f in enumerate(fixes))
    order = {StreamKind.IMU: 0, StreamKind.FIX: 1}
    events = list(heapq.merge(imu_events, fix_events, key=lambda e: (e.t, order[e.kind])))
    return EventQueue(imu=imu, fixes=fixes, events=events)


def ingest_streams(
    imu_path: str | Path,
    n_links: int,
    fix_path: str | Path | None = None,
) -> EventQueue:
    """Read the IMU stream and an optional fix stream into a replay queue."""
    imu = read_imu(imu_path, n_links)
    fixes = read_fixes(fix_path) if fix_path else []
    queue = build_event_queue(imu, fixes)
    logger.info(f"Ingested {imu.n_epochs} IMU epochs and {len(fixes)} fixes")
    return queue
