"""
有限要素場の型

- ScalarFieldP1: 頂点ごとの値（圧力・レベルセット・一般化トポロジー微分）
- ScalarFieldP2: 頂点値の後に辺中点値が並ぶ 2 次場
- VectorFieldP2: 成分ごとの ScalarFieldP2
- ElementwiseField: 三角形ごとの定数（α・特性関数）
"""

from dataclasses import dataclass

import numpy as np

from ..interfaces.data_models import AssemblyError


def _as_array(values) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim != 1:
        raise AssemblyError("場の値は 1 次元配列が必要です", details={"shape": list(array.shape)})
    return array


@dataclass(frozen=True, eq=False)
class ScalarFieldP1:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_array(self.values))

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class ScalarFieldP2:
    """先頭 num_vertices 個が頂点値"""
    values: np.ndarray
    num_vertices: int

    def __post_init__(self):
        object.__setattr__(self, "values", _as_array(self.values))
        if not 0 < self.num_vertices <= self.values.shape[0]:
            raise AssemblyError(
                "P2 場の頂点数が不正です",
                details={"num_vertices": self.num_vertices, "size": self.values.shape[0]},
            )

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def vertex_values(self) -> np.ndarray:
        return self.values[:self.num_vertices]


@dataclass(frozen=True, eq=False)
class VectorFieldP2:
    x: ScalarFieldP2
    y: ScalarFieldP2

    def __post_init__(self):
        if len(self.x) != len(self.y) or self.x.num_vertices != self.y.num_vertices:
            raise AssemblyError("ベクトル場の成分の長さが一致しません")

    @classmethod
    def from_arrays(cls, ux, uy, num_vertices: int) -> "VectorFieldP2":
        return cls(ScalarFieldP2(ux, num_vertices), ScalarFieldP2(uy, num_vertices))

    @classmethod
    def zeros(cls, size: int, num_vertices: int) -> "VectorFieldP2":
        return cls.from_arrays(np.zeros(size), np.zeros(size), num_vertices)

    @property
    def num_vertices(self) -> int:
        return self.x.num_vertices

    def __len__(self) -> int:
        return len(self.x)

    def stack(self) -> np.ndarray:
        """(N, 2) 配列"""
        return np.column_stack([self.x.values, self.y.values])

    def magnitude(self) -> np.ndarray:
        """節点ごとの |u|"""
        return np.hypot(self.x.values, self.y.values)


@dataclass(frozen=True, eq=False)
class ElementwiseField:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_array(self.values))

    def __len__(self) -> int:
        return self.values.shape[0]
