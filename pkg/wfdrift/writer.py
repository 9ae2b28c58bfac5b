import logging
import shutil
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from wfdrift.config import Config
from wfdrift.diagnostics import COLUMNS, DiagnosticsTrace
from wfdrift.grid import Grid, State

logger = logging.getLogger(__name__)


def prepare_output_dir(out_dir: Optional[Path] = None, remove_old_files: bool = False) -> Path:
    out_dir = Path(out_dir) if out_dir is not None else Config.Path.OUTPUT_DIR
    if remove_old_files:
        shutil.rmtree(out_dir, ignore_errors=True)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    rows = np.asarray(rows, dtype=np.float64).reshape(-1, len(header))
    np.savetxt(
        path, rows, delimiter=",", header=",".join(header), comments="", fmt=Config.CSV_FORMAT
    )
    logger.debug("Wrote %d rows to %s", len(rows), path)
    return path


def read_csv(path: Path) -> Tuple[List[str], np.ndarray]:
    with Path(path).open() as f:
        header = f.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def write_snapshots(
    out_dir: Path, grid: Grid, snapshots: Iterable[Tuple[float, State]]
) -> List[Path]:
    paths = []
    for k, (_, state) in enumerate(snapshots):
        path = out_dir / f"snapshot_{k:03d}.csv"
        paths.append(write_csv(path, ("x", "f"), np.column_stack([grid.x, state.f])))
    return paths


def write_diagnostics(out_dir: Path, trace: DiagnosticsTrace) -> Path:
    return write_csv(out_dir / "diagnostics.csv", COLUMNS, trace.as_array())


def write_summary(path: Path, summary: Mapping[str, object]) -> Path:
    with Path(path).open("w") as f:
        for key, value in summary.items():
            f.write(f"{key}={format_value(value)}\n")
    logger.debug("Wrote summary %s", path)
    return Path(path)


def read_summary(path: Path) -> dict:
    summary = {}
    with Path(path).open() as f:
        for line in f:
            key, _, value = line.rstrip("\n").partition("=")
            summary[key] = value
    return summary
