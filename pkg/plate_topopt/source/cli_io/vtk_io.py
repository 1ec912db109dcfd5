"""
レガシー ASCII VTK (UNSTRUCTURED_GRID) の入出力

頂点の場は POINT_DATA、要素の場は CELL_DATA に書く。数値は 17 有効桁。
同じファイルを最小解のアーカイブ（cell data "chi"）としても使う。
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np

from ..fem import ElementwiseField, ScalarFieldP1, evaluate_at_vertices
from ..interfaces.data_models import OutputError, ShapeFileError
from ..mesh import TriMesh
from ..optimizer import LevelSet, ShapeEvaluation, l2_norm
from .files import PathLike, atomic_write_text, format_float

logger = logging.getLogger(__name__)

VTK_TRIANGLE = 5
FieldValues = Union[ScalarFieldP1, ElementwiseField, np.ndarray]


def _classify(mesh: TriMesh, name: str, values: FieldValues) -> Tuple[str, np.ndarray]:
    if isinstance(values, ScalarFieldP1):
        kind, array = "point", values.values
    elif isinstance(values, ElementwiseField):
        kind, array = "cell", values.values
    else:
        array = np.asarray(values, dtype=float)
        if array.shape == (mesh.num_vertices,):
            kind = "point"
        elif array.shape == (mesh.num_triangles,):
            kind = "cell"
        else:
            raise OutputError(
                f"場 {name} の長さがメッシュと一致しません", details={"field": name, "shape": list(array.shape)}
            )
    expected = mesh.num_vertices if kind == "point" else mesh.num_triangles
    if array.shape != (expected,):
        raise OutputError(f"場 {name} の長さがメッシュと一致しません", details={"field": name})
    if not name or any(c.isspace() for c in name):
        raise OutputError(f"場の名前が不正です: {name!r}", details={"field": name})
    return kind, array


def format_field_vtk(mesh: TriMesh, fields: Mapping[str, FieldValues], title: str = "plate-topopt fields") -> str:
    """VTK テキストを生成（場の順序は引数の順）"""
    point_fields, cell_fields = [], []
    for name, values in fields.items():
        kind, array = _classify(mesh, name, values)
        (point_fields if kind == "point" else cell_fields).append((name, array))

    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.num_vertices} double")
    lines.extend(f"{format_float(x)} {format_float(y)} 0" for x, y in mesh.vertices)
    lines.append(f"CELLS {mesh.num_triangles} {4 * mesh.num_triangles}")
    lines.extend(f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist())
    lines.append(f"CELL_TYPES {mesh.num_triangles}")
    lines.extend(str(VTK_TRIANGLE) for _ in range(mesh.num_triangles))

    for header, count, group in (
        ("POINT_DATA", mesh.num_vertices, point_fields),
        ("CELL_DATA", mesh.num_triangles, cell_fields),
    ):
        if not group:
            continue
        lines.append(f"{header} {count}")
        for name, array in group:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(format_float(v) for v in array)
    return "\n".join(lines) + "\n"


def write_field_vtk(mesh: TriMesh, fields: Mapping[str, FieldValues], path: PathLike) -> Path:
    """場を VTK ファイルに書き込む"""
    path = atomic_write_text(path, format_field_vtk(mesh, fields))
    logger.info(f"VTK を書き込みました: {path}（{', '.join(fields)}）")
    return path


def evaluation_fields(evaluation: ShapeEvaluation) -> Dict[str, FieldValues]:
    """評価結果の標準出力場 psi, chi, alpha, speed, smoothed_speed"""
    fields: Dict[str, FieldValues] = {}
    if evaluation.levelset is not None:
        fields["psi"] = evaluation.levelset.psi
    fields["chi"] = evaluation.chi
    fields["alpha"] = evaluation.alpha
    speed = evaluate_at_vertices(evaluation.flow.velocity)
    smoothed = evaluate_at_vertices(evaluation.smoothed.velocity)
    fields["speed"] = ScalarFieldP1(np.hypot(speed[:, 0], speed[:, 1]))
    fields["smoothed_speed"] = ScalarFieldP1(np.hypot(smoothed[:, 0], smoothed[:, 1]))
    return fields


@dataclass
class VtkFieldData:
    """読み込んだ VTK の内容"""
    points: np.ndarray
    triangles: np.ndarray
    point_data: Dict[str, np.ndarray] = field(default_factory=dict)
    cell_data: Dict[str, np.ndarray] = field(default_factory=dict)


class _Tokens:
    def __init__(self, text: str, path: Path):
        self.lines = text.splitlines()
        self.pos = 0
        self.path = path

    def error(self, message: str) -> ShapeFileError:
        return ShapeFileError(
            f"VTK の解析に失敗しました（{self.path}, 行 {self.pos}）: {message}",
            details={"path": str(self.path), "line": self.pos},
        )

    def next_line(self) -> Optional[str]:
        while self.pos < len(self.lines):
            line = self.lines[self.pos].strip()
            self.pos += 1
            if line:
                return line
        return None

    def numbers(self, count: int, dtype=float) -> np.ndarray:
        values = []
        while len(values) < count:
            line = self.next_line()
            if line is None:
                raise self.error(f"値が不足しています（{count} 個必要）")
            try:
                values.extend(dtype(tok) for tok in line.split())
            except ValueError as e:
                raise self.error(str(e)) from e
        if len(values) != count:
            raise self.error("値の個数が一致しません")
        return np.array(values, dtype=dtype)


def read_field_vtk(path: PathLike) -> VtkFieldData:
    """
    write_field_vtk が書いた形式の VTK を読み込む

    Raises:
        ShapeFileError: ファイルがない・形式が不正
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ShapeFileError(f"形状ファイルを読めません: {path}: {e}", details={"path": str(path)}) from e

    tokens = _Tokens(text, path)
    header = tokens.next_line()
    if header is None or not header.startswith("# vtk DataFile"):
        raise tokens.error("VTK ヘッダーがありません")
    tokens.next_line()  # タイトル
    if tokens.next_line() != "ASCII":
        raise tokens.error("ASCII 形式のみ対応しています")
    if tokens.next_line() != "DATASET UNSTRUCTURED_GRID":
        raise tokens.error("UNSTRUCTURED_GRID のみ対応しています")

    data = None
    points = triangles = None
    section = None
    while True:
        line = tokens.next_line()
        if line is None:
            break
        parts = line.split()
        keyword = parts[0]
        try:
            if keyword == "POINTS":
                points = tokens.numbers(3 * int(parts[1])).reshape(-1, 3)[:, :2]
            elif keyword == "CELLS":
                cells = tokens.numbers(int(parts[2]), dtype=int).reshape(-1, 4)
                if np.any(cells[:, 0] != 3):
                    raise tokens.error("三角形以外のセルがあります")
                triangles = cells[:, 1:]
            elif keyword == "CELL_TYPES":
                types = tokens.numbers(int(parts[1]), dtype=int)
                if np.any(types != VTK_TRIANGLE):
                    raise tokens.error("三角形以外のセル型があります")
            elif keyword in ("POINT_DATA", "CELL_DATA"):
                section = (keyword, int(parts[1]))
            elif keyword == "SCALARS":
                if section is None:
                    raise tokens.error("POINT_DATA / CELL_DATA の前に SCALARS があります")
                if tokens.next_line() != "LOOKUP_TABLE default":
                    raise tokens.error("LOOKUP_TABLE default が必要です")
                values = tokens.numbers(section[1])
                if data is None:
                    if points is None or triangles is None:
                        raise tokens.error("POINTS / CELLS がありません")
                    data = VtkFieldData(points=points, triangles=triangles)
                target = data.point_data if section[0] == "POINT_DATA" else data.cell_data
                target[parts[1]] = values
            else:
                raise tokens.error(f"未対応のキーワード: {keyword}")
        except (IndexError, ValueError) as e:
            raise tokens.error(str(e)) from e

    if points is None or triangles is None:
        raise tokens.error("POINTS / CELLS がありません")
    return data or VtkFieldData(points=points, triangles=triangles)


def load_shape(path: PathLike, mesh: TriMesh) -> Tuple[Optional[LevelSet], ElementwiseField]:
    """
    形状ファイルから (ψ, χ) を読み込み、メッシュとの整合を確認

    ψ は point data "psi" があれば返す。χ は cell data "chi"（必須）。
    """
    data = read_field_vtk(path)
    details = {"path": str(path)}
    if data.points.shape != mesh.vertices.shape or not np.allclose(data.points, mesh.vertices, atol=1e-12, rtol=0.0):
        raise ShapeFileError("形状ファイルの頂点がメッシュと一致しません", details=details)
    if data.triangles.shape != mesh.triangles.shape or not np.array_equal(data.triangles, mesh.triangles):
        raise ShapeFileError("形状ファイルの三角形がメッシュと一致しません", details=details)
    if "chi" not in data.cell_data:
        raise ShapeFileError("形状ファイルに cell data 'chi' がありません", details=details)
    chi = data.cell_data["chi"]
    if not np.all((chi == 0.0) | (chi == 1.0)):
        raise ShapeFileError("chi は 0 または 1 の値のみを取ります", details=details)
    psi = None
    if "psi" in data.point_data:
        values = data.point_data["psi"]
        if abs(l2_norm(mesh, values) - 1.0) <= 1e-12:
            psi = LevelSet(ScalarFieldP1(values))
        else:
            psi = LevelSet.normalized(mesh, values)
    return psi, ElementwiseField(chi)
