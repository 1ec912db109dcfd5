"""共通フィクスチャ"""

import numpy as np
import pytest

from plate_topopt.source.fem import ElementwiseField
from plate_topopt.source.mesh import build_unit_square_mesh
from plate_topopt.source.optimizer import FlowParameters, LevelSet, OptimizerSettings


@pytest.fixture(scope="session")
def mesh_1():
    return build_unit_square_mesh(1)


@pytest.fixture(scope="session")
def mesh_2():
    return build_unit_square_mesh(2)


@pytest.fixture(scope="session")
def mesh_10():
    return build_unit_square_mesh(10)


@pytest.fixture(scope="session")
def mesh_20():
    return build_unit_square_mesh(20)


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


@pytest.fixture
def flow_params():
    return FlowParameters()


@pytest.fixture
def quick_settings():
    return OptimizerSettings(max_iterations=3)


def band_levelset(mesh, half_width: float = 0.2) -> LevelSet:
    """y = 0.5 を中心とする水平な流路（流体: |y − 0.5| < half_width）"""
    return LevelSet.normalized(mesh, np.abs(mesh.vertices[:, 1] - 0.5) - half_width)


def random_chi(mesh, rng) -> ElementwiseField:
    return ElementwiseField((rng.random(mesh.num_triangles) < 0.5).astype(float))
