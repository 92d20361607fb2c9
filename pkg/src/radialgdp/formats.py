"""
Readers and writers of the on-disk artifacts: disk surfaces, point clouds and radial curve
sets as CSV files with a header row, and OBJ exports (vertices plus line elements) for
external mesh viewers.

Writers format every float with `%.17g`, so values round-trip exactly and repeated runs
produce identical files. Readers report malformed input as `DataError` carrying the path
and the 1-based line number.
"""

import csv
import math
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import NDArray
from properpath import ProperPath

from .circle_kernel import CircleGrid
from .errors import ArtifactNotFoundError, DataError, DomainError
from .surface import DiskSurface, PointCloud, RadialCurveSet

SURFACE_HEADER = ("r", "theta", "x", "y", "z")
POINT_CLOUD_HEADER = ("x", "y", "z")
CURVE_SET_HEADER = ("curve", "r", "t", "x", "y", "z")
FLOAT_FORMAT = "%.17g"
ANGLE_TOLERANCE = 1e-9


def _write_rows(path: Path, header: Sequence[str], rows: NDArray[np.float64], fmt) -> None:
    path = Path(path)
    ProperPath(path.parent, kind="dir").create(verbose=False)
    np.savetxt(path, rows, fmt=fmt, delimiter=",", header=",".join(header), comments="")


def _read_rows(path: Path, header: Sequence[str]) -> Iterator[tuple[int, list[float]]]:
    path = Path(path)
    if not path.is_file():
        raise ArtifactNotFoundError(f"No such file: {path}", path=path)
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        found = next(reader, None)
        if found is None or tuple(cell.strip() for cell in found) != tuple(header):
            raise DataError(
                f"Expected header {','.join(header)!r}, got {found!r}.", path=path, line=1
            )
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"Expected {len(header)} fields, got {len(row)}.",
                    path=path,
                    line=reader.line_num,
                )
            try:
                values = [float(cell) for cell in row]
            except ValueError as e:
                raise DataError(str(e), path=path, line=reader.line_num) from e
            if not all(math.isfinite(value) for value in values):
                raise DataError("Non-finite value.", path=path, line=reader.line_num)
            yield reader.line_num, values


def write_surface_csv(surface: DiskSurface, path: Path) -> None:
    """Writes rows `(r, theta, x, y, z)`, row-major over the `(r, theta)` grid."""
    r, theta = np.meshgrid(
        surface.radii, 2 * np.pi * surface.angles.points, indexing="ij"
    )
    rows = np.column_stack([r.ravel(), theta.ravel(), surface.points.reshape(-1, 3)])
    _write_rows(path, SURFACE_HEADER, rows, FLOAT_FORMAT)


def read_surface_csv(path: Path) -> DiskSurface:
    """
    Reads a surface written by `write_surface_csv`. The grid is inferred from the rows:
    the angles of the first circle must be `2 pi j / m` and repeat, in order, on every
    following circle.

    Raises:
        ArtifactNotFoundError: If the file does not exist.
        DataError: If a row is malformed or the rows do not form a polar grid.
    """
    lines, rows = [], []
    for line, values in _read_rows(path, SURFACE_HEADER):
        lines.append(line)
        rows.append(values)
    if not rows:
        raise DataError("The surface file has no rows.", path=Path(path))
    table = np.asarray(rows)
    first_radius = table[0, 0]
    m = int(np.argmax(table[:, 0] != first_radius)) or len(table)
    if len(table) % m != 0:
        raise DataError(
            f"{len(table)} rows do not split into circles of {m} angles.", path=Path(path)
        )
    grid = CircleGrid(m)
    expected_theta = np.tile(2 * np.pi * grid.points, len(table) // m)
    expected_r = np.repeat(table[::m, 0], m)
    for index in range(len(table)):
        if table[index, 0] != expected_r[index] or not math.isclose(
            table[index, 1], expected_theta[index], abs_tol=ANGLE_TOLERANCE
        ):
            raise DataError(
                "Rows are not row-major over a uniform (r, theta) grid.",
                path=Path(path),
                line=lines[index],
            )
    try:
        return DiskSurface(table[::m, 0], grid, table[:, 2:].reshape(-1, m, 3))
    except DomainError as e:
        raise DataError(str(e), path=Path(path)) from e


def write_point_cloud_csv(cloud: PointCloud, path: Path) -> None:
    _write_rows(path, POINT_CLOUD_HEADER, cloud.points, FLOAT_FORMAT)


def read_point_cloud_csv(path: Path, registered: bool = True) -> PointCloud:
    """
    Raises:
        ArtifactNotFoundError: If the file does not exist.
        DataError: If a row is malformed or the file has no points.
    """
    rows = [values for _, values in _read_rows(path, POINT_CLOUD_HEADER)]
    if not rows:
        raise DataError("The point cloud file has no rows.", path=Path(path))
    return PointCloud(np.asarray(rows), registered=registered)


def write_curve_set_csv(curve_set: RadialCurveSet, path: Path) -> None:
    """
    Writes rows `(curve, r, t, x, y, z)`: `m + 1` rows per curve, the last one at `t = 1`
    repeating the first sample exactly.
    """
    closed = curve_set.closed_curves()
    J, m = curve_set.J, curve_set.grid.m
    rows = np.column_stack(
        [
            np.repeat(np.arange(J), m + 1),
            np.repeat(curve_set.radii_selected, m + 1),
            np.tile(curve_set.grid.closed_points, J),
            np.transpose(closed, (0, 2, 1)).reshape(-1, 3),
        ]
    )
    _write_rows(path, CURVE_SET_HEADER, rows, ["%d"] + [FLOAT_FORMAT] * 5)


def read_curve_set_csv(path: Path) -> RadialCurveSet:
    """
    Raises:
        ArtifactNotFoundError: If the file does not exist.
        DataError: If a row is malformed, the curves differ in length, or a curve does not
            end on its first sample.
    """
    path = Path(path)
    curves: dict[int, list[tuple[int, list[float]]]] = {}
    for line, values in _read_rows(path, CURVE_SET_HEADER):
        curves.setdefault(int(values[0]), []).append((line, values[1:]))
    if not curves or sorted(curves) != list(range(len(curves))):
        raise DataError("Curve indices must run from 0 without gaps.", path=path)
    lengths = {len(rows) for rows in curves.values()}
    if len(lengths) != 1 or min(lengths) < 2:
        raise DataError(f"Curves have inconsistent lengths {sorted(lengths)}.", path=path)
    grid = CircleGrid(lengths.pop() - 1)
    radii, values = [], []
    for index in range(len(curves)):
        rows = curves[index]
        table = np.asarray([row for _, row in rows])
        if not np.array_equal(table[0, 2:], table[-1, 2:]):
            raise DataError(
                f"Curve {index} does not end on its first sample.", path=path, line=rows[-1][0]
            )
        radii.append(table[0, 0])
        values.append(table[:-1, 2:].T)
    try:
        return RadialCurveSet(np.asarray(radii), np.asarray(values), grid)
    except DomainError as e:
        raise DataError(str(e), path=path) from e


def _format_vertex(point: NDArray[np.float64]) -> str:
    return "v " + " ".join(FLOAT_FORMAT % value for value in point)


def write_curve_set_obj(curve_set: RadialCurveSet, path: Path) -> None:
    """One closed polyline (`l` element) per curve; vertices are not duplicated."""
    m = curve_set.grid.m
    lines = [f"# {curve_set.J} radial curves, {m} samples each"]
    for j in range(curve_set.J):
        lines.extend(_format_vertex(p) for p in curve_set.curves[j].T)
    for j in range(curve_set.J):
        indices = [j * m + i + 1 for i in range(m)] + [j * m + 1]
        lines.append("l " + " ".join(map(str, indices)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_surface_obj(surface: DiskSurface, path: Path) -> None:
    """The surface grid as polylines: every circle closed, every spoke from center out."""
    n_r, m = surface.n_r, surface.m
    lines = [f"# disk surface, {n_r} radii x {m} angles"]
    lines.extend(_format_vertex(p) for p in surface.points.reshape(-1, 3))
    for i in range(n_r):
        indices = [i * m + j + 1 for j in range(m)] + [i * m + 1]
        lines.append("l " + " ".join(map(str, indices)))
    for j in range(m):
        lines.append("l " + " ".join(str(i * m + j + 1) for i in range(n_r)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
